"""
证书的采样与仿真检验
  Lyapunov 下降：在 {xᵀPx = 1} 上随机采样，检查 V̇ 的上界 xᵀΔx + 2xᵀP(B_u+S_ηl B_l)u + (l_gu+l̄_hu)uᵀu ≤ 0
  ISS：随机初值下零输入响应在 V = xᵀPx 上单调衰减，有界多正弦输入下响应有界
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.ellipsoids.invariance import admissible_input
from certmodel.models.extended import ExtendedModel, UncertaintyModel, eval_extended_rhs
from certmodel.models.system import SystemModel
from certmodel.sdp.linalg import SymMatrix
from certmodel.sdp.problem import DEFAULT_STRICT_EPS
from certmodel.simulation.integrator import DEFAULT_DT, integrate_batch, time_grid
from certmodel.simulation.signals import MultisineSpec, ZeroSignal
from certmodel.verify.certificate import TOLERANCE_FACTOR, delta_matrix, lipschitz_scalars

logger = logging.getLogger(__name__)

MONOTONE_RTOL = 1e-9
DECAY_FRACTION = 0.5
STATE_BOUND = 1e6


@dataclass
class LyapunovSampleReport:
    """V̇ 上界的采样检验结果"""
    samples: int
    max_bound: float = float('-inf')
    max_vdot: float = float('-inf')
    positive: int = 0
    tolerance: float = 0.0
    issues: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.issues

    def to_dict(self) -> Dict[str, Any]:
        return {'samples': self.samples, 'max_bound': self.max_bound, 'max_vdot': self.max_vdot,
                'positive': self.positive, 'tolerance': self.tolerance, 'passed': self.passed,
                'issues': list(self.issues)}


def sample_lyapunov_decrease(sys: SystemModel, theta: UncertaintyModel, p,
                             scalars: Dict[str, float], u_set: Optional[Ellipsoid] = None,
                             samples: int = 1000, rng: Optional[np.random.Generator] = None,
                             eps: float = DEFAULT_STRICT_EPS) -> LyapunovSampleReport:
    """
    在不变集边界上采样检查 V̇ 的上界

    Args:
        sys: 已知系统
        theta: 不确定性模型
        p: 证书矩阵
        scalars: Lipschitz 常数与 l̄_hx
        u_set: 输入集合（None 时取 u = 0）
        samples: 采样点数
        rng: 随机数发生器
        eps: 严格裕量

    Returns:
        LyapunovSampleReport；max_vdot 为沿扩展模型的实际 V̇，仅作记录
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    p = np.asarray(getattr(p, 'array', p), dtype=float)
    lip = lipschitz_scalars(sys, scalars)
    delta = delta_matrix(sys, theta, p, scalars)
    report = LyapunovSampleReport(samples)
    report.tolerance = TOLERANCE_FACTOR * eps * max(1.0, float(np.linalg.norm(delta)))
    if samples == 0:
        return report

    x = Ellipsoid(SymMatrix(p, check=False)).sample_boundary(samples, rng)
    if sys.l and u_set is not None:
        u = u_set.sample_interior(samples, rng)
    else:
        u = np.zeros((samples, sys.l))

    coupling = p @ (sys.b_u + theta.s_eta_l @ theta.b_l) if sys.l else np.zeros((sys.n, 0))
    bound = (np.einsum('si,ij,sj->s', x, delta, x)
             + 2.0 * np.einsum('si,ij,sj->s', x, coupling, u)
             + (lip['l_gu'] + lip['l_hu_bar']) * np.sum(u ** 2, axis=1))
    model = ExtendedModel(sys, theta)
    vdot = 2.0 * np.einsum('si,ij,sj->s', x, p, eval_extended_rhs(model, x, u))

    report.max_bound = float(np.max(bound))
    report.max_vdot = float(np.max(vdot))
    report.positive = int(np.sum(bound > report.tolerance))
    if report.positive:
        report.issues.append(f"{report.positive}/{samples} 个采样点 V̇ 上界为正 "
                             f"(max {report.max_bound:.6g})")
        logger.warning(f"✗ Lyapunov 下降采样失败: {report.issues[-1]}")
    else:
        logger.info(f"✓ Lyapunov 下降采样通过: {samples} 点, max 上界 {report.max_bound:.4g}")
    return report


@dataclass
class IssReport:
    """ISS 仿真检验结果"""
    trials: int
    max_state_norm: float = 0.0
    decay_ratios: List[float] = field(default_factory=list)
    diverged: int = 0
    vacuous: bool = False
    issues: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.issues or self.vacuous

    def to_dict(self) -> Dict[str, Any]:
        return {
            'trials': self.trials,
            'max_state_norm': self.max_state_norm,
            'max_decay_ratio': max(self.decay_ratios, default=0.0),
            'diverged': self.diverged,
            'vacuous': self.vacuous,
            'passed': self.passed,
            'issues': list(self.issues),
        }


def iss_bound_simulation(model: ExtendedModel, trials: int = 20, t_f: float = 20.0,
                         dt: float = DEFAULT_DT, rng: Optional[np.random.Generator] = None,
                         x0_radius: float = 1.0, input_spec: Optional[MultisineSpec] = None,
                         input_set: Optional[Ellipsoid] = None) -> IssReport:
    """
    ISS 的定性仿真检验

    每次试验包含一条零输入轨迹（要求 V 单调不增且终值 ≤ 初值的 DECAY_FRACTION）
    和一条有界多正弦输入轨迹（要求不发散且 ‖x‖ ≤ STATE_BOUND）

    Args:
        model: 带 ISS 证书的扩展模型
        trials: 试验次数
        t_f: 仿真时长
        dt: 步长
        rng: 随机数发生器
        x0_radius: 初值 ‖x(0)‖
        input_spec: 输入分布
        input_set: 输入幅值集合（缺省为单位球）

    Raises:
        ValueError: 模型没有 ISS 证书
    """
    cert = model.certificate
    if cert is None or cert.kind != 'iss':
        raise ValueError("ISS 仿真检验需要 ISS 证书")
    if trials < 0:
        raise ValueError(f"试验次数必须非负: {trials}")
    if trials == 0:
        logger.info("⊘ trials = 0，ISS 检验为空")
        return IssReport(trials=0, vacuous=True, issues=['trials = 0，检验为空（vacuous）'])

    rng = rng if rng is not None else np.random.default_rng(0)
    sys = model.system
    p = cert.p.array
    x0 = rng.standard_normal((trials, sys.n))
    x0 *= x0_radius / np.maximum(np.linalg.norm(x0, axis=1, keepdims=True), 1e-300)

    def rhs(x, u):
        return eval_extended_rhs(model, x, u)

    report = IssReport(trials=trials)
    free = integrate_batch(rhs, x0, [ZeroSignal(sys.l)] * trials, t_f, dt)
    for k, traj in enumerate(free):
        if traj.diverged:
            report.diverged += 1
            report.issues.append(f"零输入试验 {k} 发散")
            continue
        v = np.einsum('ti,ij,tj->t', traj.states, p, traj.states)
        rises = np.diff(v) > MONOTONE_RTOL * v[0] + 1e-15
        ratio = float(v[-1] / v[0]) if v[0] > 0 else 0.0
        report.decay_ratios.append(ratio)
        if np.any(rises):
            report.issues.append(f"零输入试验 {k}: V 在 {int(np.sum(rises))} 个步长上增加")
        if ratio > DECAY_FRACTION:
            report.issues.append(f"零输入试验 {k}: V(t_f)/V(0) = {ratio:.4g} 未充分衰减")

    if sys.l:
        u_set = input_set or Ellipsoid.ball(sys.l)
        spec = input_spec or MultisineSpec(channels=sys.l, t_f=t_f)
        half = np.arange(2 * (time_grid(t_f, dt).size - 1) + 1) * (0.5 * dt)
        inputs = [admissible_input(MultisineSpec.from_dict({**spec.to_dict(), 'channels': sys.l,
                                                            'active_channel': k % sys.l}),
                                   u_set, half, rng) for k in range(trials)]
        forced = integrate_batch(rhs, x0, inputs, t_f, dt)
        for k, traj in enumerate(forced):
            if traj.diverged:
                report.diverged += 1
                report.issues.append(f"有界输入试验 {k} 发散")
                continue
            peak = float(np.max(np.linalg.norm(traj.states, axis=1)))
            report.max_state_norm = max(report.max_state_norm, peak)
            if peak > STATE_BOUND:
                report.issues.append(f"有界输入试验 {k}: max ‖x‖ = {peak:.4g}")

    if report.passed:
        logger.info(f"✓ ISS 仿真检验通过: {trials} 次试验, "
                    f"max V(t_f)/V(0) = {max(report.decay_ratios, default=0.0):.4g}")
    else:
        logger.warning(f"✗ ISS 仿真检验失败: {len(report.issues)} 项问题")
    return report
