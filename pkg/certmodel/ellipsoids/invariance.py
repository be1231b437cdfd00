"""
不变集的仿真检验
从 E_inv 内（含边界）采样初值，用逐点满足 uᵀUu ≤ 1 的多正弦输入驱动扩展模型，
记录每条轨迹上 sup_t xᵀPx
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.models.extended import ExtendedModel, eval_extended_rhs
from certmodel.simulation.integrator import DEFAULT_DT, integrate_batch, time_grid
from certmodel.simulation.signals import Multisine, MultisineSpec, ZeroSignal, generate_multisine

logger = logging.getLogger(__name__)

INVARIANCE_TOL = 1e-6


@dataclass
class InvarianceReport:
    """不变集仿真检验结果"""
    trials: int
    max_level: float = 0.0
    levels: List[float] = field(default_factory=list)
    diverged: int = 0
    vacuous: bool = False
    issues: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.issues or self.vacuous

    def to_dict(self) -> Dict[str, Any]:
        return {
            'trials': self.trials,
            'max_level': self.max_level,
            'diverged': self.diverged,
            'vacuous': self.vacuous,
            'passed': self.passed,
            'issues': list(self.issues),
        }


def admissible_input(spec: MultisineSpec, u_set: Ellipsoid, times: np.ndarray,
                     rng: np.random.Generator) -> Multisine:
    """生成多正弦输入并整体缩放，使网格上每点 uᵀUu ≤ 1"""
    signal = generate_multisine(spec, rng)
    level = float(np.max(u_set.quadratic(signal.sample(times)), initial=0.0))
    if level > 1.0:
        signal = signal.scaled(1.0 / np.sqrt(level))
    return signal


def empirical_invariance(model: ExtendedModel, u_set: Ellipsoid, trials: int = 100,
                         t_f: float = 20.0, dt: float = DEFAULT_DT,
                         rng: Optional[np.random.Generator] = None,
                         input_spec: Optional[MultisineSpec] = None,
                         tol: float = INVARIANCE_TOL) -> InvarianceReport:
    """
    仿真检验 E_inv = {x : xᵀPx ≤ 1} 的前向不变性

    Args:
        model: 带证书的扩展模型
        u_set: 输入集合 E_u
        trials: 仿真次数
        t_f: 仿真时长
        dt: 步长
        rng: 随机数发生器
        input_spec: 输入分布（缺省为默认多正弦分布）
        tol: 允许的超出量

    Returns:
        InvarianceReport（发散记为违反）
    """
    if model.certificate is None:
        raise ValueError("扩展模型缺少稳定性证书")
    if trials < 0:
        raise ValueError(f"仿真次数必须非负: {trials}")
    if trials == 0:
        logger.info("⊘ trials = 0，不变性检验为空")
        return InvarianceReport(trials=0, vacuous=True, issues=['trials = 0，检验为空（vacuous）'])

    rng = rng if rng is not None else np.random.default_rng(0)
    sys = model.system
    p = model.certificate.p.array
    inv_set = Ellipsoid(model.certificate.p)

    # 一半初值在边界上，一半在内部
    n_boundary = trials // 2
    x0 = np.vstack([
        inv_set.sample_boundary(n_boundary, rng),
        inv_set.sample_interior(trials - n_boundary, rng),
    ])

    half = np.arange(2 * (time_grid(t_f, dt).size - 1) + 1) * (0.5 * dt)
    if sys.l == 0:
        inputs = [ZeroSignal(0)] * trials
    else:
        spec = input_spec or MultisineSpec(channels=sys.l, t_f=t_f)
        inputs = []
        for k in range(trials):
            trial_spec = MultisineSpec.from_dict({**spec.to_dict(), 'channels': sys.l,
                                                  'active_channel': k % sys.l})
            inputs.append(admissible_input(trial_spec, u_set, half, rng))

    trajectories = integrate_batch(lambda x, u: eval_extended_rhs(model, x, u), x0, inputs, t_f, dt)

    report = InvarianceReport(trials=trials)
    for k, traj in enumerate(trajectories):
        if traj.diverged:
            report.diverged += 1
            report.levels.append(float('inf'))
            report.issues.append(f"第 {k} 次仿真发散 (t = {traj.meta['divergence_time']:.4g} s)")
            continue
        level = float(np.max(np.einsum('ti,ij,tj->t', traj.states, p, traj.states)))
        report.levels.append(level)
        if level > 1.0 + tol:
            report.issues.append(f"第 {k} 次仿真离开不变集: max xᵀPx = {level:.6g}")
    report.max_level = float(max(report.levels))

    if report.passed:
        logger.info(f"✓ 不变集检验通过: {trials} 次仿真, max xᵀPx = {report.max_level:.6g}")
    else:
        logger.warning(f"✗ 不变集检验失败: {len(report.issues)} 项问题, max xᵀPx = {report.max_level:.6g}")
    return report
