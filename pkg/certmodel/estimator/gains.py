"""
估计器增益证书的仿真校验
误差 e = x̂_a − x_a，e_d = C̄_a e；从 e(0) = 0 出发：
  ‖e_d‖_L2 / ‖ω_a‖_L2 ≤ √ρ*，sup_t ‖e_d(t)‖ / ‖ν_a‖_L2 ≤ 噪声增益上界
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import scipy.integrate

from certmodel.estimator.filter import EstimatorFilter
from certmodel.simulation.integrator import DEFAULT_DT, Trajectory, integrate
from certmodel.simulation.signals import Signal, SinusoidalNoise, ZeroSignal

logger = logging.getLogger(__name__)

# 经验增益比与上界比较时的相对余量（RK4 离散与梯形积分误差）
GAIN_RTOL = 1e-2
GAIN_ATOL = 1e-9


class _StackedSignal(Signal):
    """按列拼接多个信号"""

    def __init__(self, *signals: Signal):
        self.signals = signals
        self.dim = sum(s.dim for s in signals)

    def sample(self, times) -> np.ndarray:
        n = np.size(times)
        parts = [s.sample(times).reshape(n, s.dim) for s in self.signals]
        return np.hstack(parts) if parts else np.zeros((n, 0))


class _NoiseDerivative(Signal):
    def __init__(self, noise: SinusoidalNoise):
        self.noise = noise
        self.dim = noise.dim

    def sample(self, times) -> np.ndarray:
        return self.noise.derivative(times)


@dataclass
class GainReport:
    """增益校验结果"""
    trials: int
    l2_bound: float
    noise_bound: float
    rtol: float = GAIN_RTOL
    l2_ratios: List[float] = field(default_factory=list)
    noise_ratios: List[float] = field(default_factory=list)
    issues: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.issues

    def to_dict(self) -> Dict[str, Any]:
        return {
            'trials': self.trials,
            'passed': self.passed,
            'l2_bound': self.l2_bound,
            'noise_bound': self.noise_bound,
            'rtol': self.rtol,
            'l2_ratio_max': max(self.l2_ratios, default=0.0),
            'noise_ratio_max': max(self.noise_ratios, default=0.0),
            'issues': list(self.issues),
        }


def _l2_norm(times: np.ndarray, values: np.ndarray) -> float:
    return float(np.sqrt(scipy.integrate.trapezoid(np.sum(values ** 2, axis=1), times)))


def simulate_joint(filt: EstimatorFilter, omega_a: Optional[Signal], nu: Optional[Signal],
                   t_f: float, dt: float = DEFAULT_DT) -> Trajectory:
    """
    增广对象与滤波器联合仿真（u = 0，x_a(0) = 0，e(0) = 0）

    Args:
        filt: 估计器
        omega_a: (ω, η^(r)) 信号，None 表示 0
        nu: 测量噪声，None 表示 0

    Returns:
        Trajectory：states 为误差 e，outputs 为 e_d
    """
    aug = filt.aug
    sys = aug.system
    n_z, n_wa, m_nu = aug.n_z, aug.b_omega_a.shape[1], sys.m_nu
    omega_a = omega_a if omega_a is not None else ZeroSignal(n_wa)
    nu = nu if nu is not None else ZeroSignal(m_nu)
    u_zero = np.zeros(sys.l)

    def plant_output(x_a, noise):
        return x_a @ aug.c_a.T + noise @ sys.d_nu.T

    def rhs(state, w):
        x_a, z = state[..., :n_z], state[..., n_z:]
        w_a, noise = w[..., :n_wa], w[..., n_wa:]
        u = np.broadcast_to(u_zero, x_a.shape[:-1] + (sys.l,))
        dx = x_a @ aug.a_a.T + w_a @ aug.b_omega_a.T
        if sys.n_g:
            dx = dx + sys.g(x_a @ aug.v_ga.T, u) @ aug.s_ga.T
        dz = filt.rhs(z, u, plant_output(x_a, noise))
        return np.concatenate([dx, dz], axis=-1)

    signal = _StackedSignal(omega_a, nu)
    z0 = filt.e @ plant_output(np.zeros(n_z), nu(0.0))
    traj = integrate(rhs, np.concatenate([np.zeros(n_z), z0]), signal, t_f, dt,
                     meta={'kind': 'estimator-joint'})
    x_a, z = traj.states[:, :n_z], traj.states[:, n_z:]
    noise = traj.inputs[:, n_wa:]
    err = filt.state_estimate(z, plant_output(x_a, noise)) - x_a
    return Trajectory(traj.times, err, traj.inputs, err @ aug.c_bar.T, traj.meta)


def simulate_error_dynamics(filt: EstimatorFilter, omega_a: Optional[Signal],
                            nu: Optional[SinusoidalNoise], t_f: float, dt: float = DEFAULT_DT,
                            e0: Optional[np.ndarray] = None) -> Trajectory:
    """
    线性误差动态 ė = N e − M B_ωa ω_a + B_νa ν_a，ν_a = (ν, ν̇)

    Raises:
        ValueError: 系统含已知非线性 g（误差动态中有 δg 项）
    """
    aug = filt.aug
    sys = aug.system
    if sys.n_g:
        raise ValueError("误差动态仅在 g ≡ 0 时为线性，请使用 simulate_joint")
    n_wa = aug.b_omega_a.shape[1]
    omega_a = omega_a if omega_a is not None else ZeroSignal(n_wa)
    signals = [omega_a]
    if nu is not None:
        signals += [nu, _NoiseDerivative(nu)]
    else:
        signals.append(ZeroSignal(2 * sys.m_nu))
    drive = np.hstack([-filt.m_mat @ aug.b_omega_a, filt.b_nu_a])

    def rhs(e, w):
        return e @ filt.n_mat.T + w @ drive.T

    e0 = np.zeros(aug.n_z) if e0 is None else np.asarray(e0, dtype=float).reshape(-1)
    return integrate(rhs, e0, _StackedSignal(*signals), t_f, dt,
                     output=lambda e, w: e @ aug.c_bar.T, meta={'kind': 'estimator-error'})


def verify_gain_bounds(filt: EstimatorFilter, trials: int = 20, t_f: float = 5.0,
                       dt: float = DEFAULT_DT, rng: Optional[np.random.Generator] = None,
                       level: float = 1.0, max_frequency: float = 10.0,
                       rtol: float = GAIN_RTOL) -> GainReport:
    """
    随机扰动/噪声下校验两个增益上界

    Args:
        filt: 估计器
        trials: 每类信号的试验次数
        t_f: 仿真时长
        dt: 步长
        rng: 随机数发生器
        level: 信号幅值
        max_frequency: 正弦分量的最高角频率
        rtol: 经验比值允许超出上界的相对余量

    Returns:
        GainReport
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    aug = filt.aug
    n_wa, m_nu = aug.b_omega_a.shape[1], aug.system.m_nu
    l2_bound = float(filt.bounds.get('l2_gain', np.inf))
    noise_bound = float(filt.bounds.get('noise_gain', np.inf))
    report = GainReport(trials, l2_bound, noise_bound, rtol)

    for i in range(trials):
        if n_wa:
            omega_a = SinusoidalNoise.random(n_wa, level, rng, max_frequency=max_frequency)
            traj = simulate_joint(filt, omega_a, None, t_f, dt)
            w_norm = _l2_norm(traj.times, traj.inputs[:, :n_wa])
            ratio = _l2_norm(traj.times, traj.outputs) / w_norm if w_norm > 0 else 0.0
            report.l2_ratios.append(ratio)
            if ratio > l2_bound * (1.0 + rtol) + GAIN_ATOL:
                report.issues.append(f"扰动试验 {i}: L2 增益 {ratio:.6g} > √ρ* = {l2_bound:.6g}")

        if m_nu:
            noise = SinusoidalNoise.random(m_nu, level, rng, max_frequency=max_frequency)
            traj = simulate_joint(filt, None, noise, t_f, dt)
            nu_a = np.hstack([noise.sample(traj.times), noise.derivative(traj.times)])
            nu_norm = _l2_norm(traj.times, nu_a)
            peak = float(np.max(np.linalg.norm(traj.outputs, axis=1)))
            ratio = peak / nu_norm if nu_norm > 0 else 0.0
            report.noise_ratios.append(ratio)
            if ratio > noise_bound * (1.0 + rtol) + GAIN_ATOL:
                report.issues.append(f"噪声试验 {i}: 增益 {ratio:.6g} > 上界 {noise_bound:.6g}")

    if report.passed:
        logger.info(f"✓ 估计器增益校验通过 ({trials} 次试验): "
                    f"L2 ≤ {max(report.l2_ratios, default=0.0):.4g} / {l2_bound:.4g}, "
                    f"噪声 ≤ {max(report.noise_ratios, default=0.0):.4g} / {noise_bound:.4g}")
    else:
        for issue in report.issues:
            logger.warning(f"⚠ {issue}")
    return report
