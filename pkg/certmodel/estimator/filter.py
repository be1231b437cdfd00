"""
不确定性-状态估计器
ż = N z + G u + L y + M S_ga g(V_ga x̂ + H(y − C_a x̂), u)，x̂_a = z − E y
η̂ = C̄_1 x̂_a，x̂ = C̄_2 x̂_a
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from certmodel.errors import GridMismatchError
from certmodel.estimator.augment import AugmentedSystem
from certmodel.simulation.integrator import integrate, time_grid
from certmodel.simulation.signals import SampledSignal

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EstimatorFilter:
    """
    估计器：增益 ψ = (E, K, H) 及导出矩阵

    Attributes:
        aug: 增广系统
        e, k, h: 增益
        l_gx: 设计时使用的 Lipschitz 常数
        bounds: 增益证书（rho, sigma, b, l2_gain, noise_gain）
        diagnostics: 求解诊断
    """
    aug: AugmentedSystem
    e: np.ndarray
    k: np.ndarray
    h: np.ndarray
    l_gx: float = 0.0
    bounds: Dict[str, float] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    m_mat: np.ndarray = field(init=False, repr=False)
    n_mat: np.ndarray = field(init=False, repr=False)
    g_mat: np.ndarray = field(init=False, repr=False)
    l_mat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        aug = self.aug
        m = aug.system.m
        e = np.asarray(self.e, dtype=float).reshape(aug.n_z, m)
        k = np.asarray(self.k, dtype=float).reshape(aug.n_z, m)
        h = np.asarray(self.h, dtype=float).reshape(aug.system.n_vg, m)
        object.__setattr__(self, 'e', e)
        object.__setattr__(self, 'k', k)
        object.__setattr__(self, 'h', h)

        m_mat = np.eye(aug.n_z) + e @ aug.c_a
        object.__setattr__(self, 'm_mat', m_mat)
        object.__setattr__(self, 'n_mat', m_mat @ aug.a_a - k @ aug.c_a)
        object.__setattr__(self, 'g_mat', m_mat @ aug.b_ua)
        object.__setattr__(self, 'l_mat', k @ (np.eye(m) + aug.c_a @ e) - m_mat @ aug.a_a @ e)

    @property
    def b_nu_a(self) -> np.ndarray:
        """[K D_ν  −E D_ν]"""
        d_nu = self.aug.system.d_nu
        return np.hstack([self.k @ d_nu, -self.e @ d_nu])

    def state_estimate(self, z: np.ndarray, y: np.ndarray) -> np.ndarray:
        """x̂_a = z − E y"""
        return np.asarray(z, dtype=float) - np.asarray(y, dtype=float) @ self.e.T

    def rhs(self, z: np.ndarray, u: np.ndarray, y: np.ndarray) -> np.ndarray:
        """滤波器向量场，支持 (..., n_z) 批量"""
        aug = self.aug
        sys = aug.system
        z = np.asarray(z, dtype=float)
        y = np.asarray(y, dtype=float)
        dz = z @ self.n_mat.T + y @ self.l_mat.T
        if sys.l:
            dz = dz + np.asarray(u, dtype=float) @ self.g_mat.T
        if sys.n_g:
            x_hat = self.state_estimate(z, y)
            s = x_hat @ aug.v_ga.T + (y - x_hat @ aug.c_a.T) @ self.h.T
            dz = dz + sys.g(s, u) @ (self.m_mat @ aug.s_ga).T
        return dz

    def outputs(self, z: np.ndarray, y: np.ndarray):
        """(η̂, x̂)"""
        x_hat = self.state_estimate(z, y)
        return x_hat @ self.aug.c_bar_1.T, x_hat @ self.aug.c_bar_2.T

    def to_dict(self) -> Dict[str, Any]:
        return {'r': self.aug.r, 'n_z': self.aug.n_z, 'l_gx': self.l_gx, 'bounds': dict(self.bounds)}


@dataclass(frozen=True, eq=False)
class FilterRun:
    """滤波器在一条数据上的输出"""
    times: np.ndarray
    eta_hat: np.ndarray
    x_hat: np.ndarray
    z: np.ndarray


def run_filter(filt: EstimatorFilter, times: np.ndarray, u: np.ndarray, y: np.ndarray,
               z0: Optional[np.ndarray] = None) -> FilterRun:
    """
    在测量数据上积分滤波器（与数据相同的 RK4 网格，半步处线性插值）

    Args:
        filt: 估计器
        times: 等间距时间网格
        u: (T, l) 输入
        y: (T, m) 测量输出
        z0: 初始状态（缺省 0）

    Returns:
        FilterRun

    Raises:
        GridMismatchError: 网格不等间距或与数据长度不一致
        SimulationDivergenceError: 滤波器发散
    """
    sys = filt.aug.system
    times = np.asarray(times, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(times.size, sys.l)
    y = np.asarray(y, dtype=float).reshape(times.size, sys.m)
    if times.size < 2:
        raise GridMismatchError("时间网格至少需要两个点")
    dt = float(times[1] - times[0])
    grid = time_grid(float(times[-1] - times[0]), dt)
    if grid.size != times.size or not np.allclose(grid + times[0], times, rtol=0, atol=1e-6 * dt):
        raise GridMismatchError("滤波器要求等间距时间网格")

    z0 = np.zeros(filt.aug.n_z) if z0 is None else np.asarray(z0, dtype=float).reshape(-1)
    l = sys.l
    signal = SampledSignal(times - times[0], np.hstack([u, y]))
    traj = integrate(lambda z, uy: filt.rhs(z, uy[..., :l], uy[..., l:]), z0, signal,
                     float(times[-1] - times[0]), dt, meta={'kind': 'filter'})
    eta_hat, x_hat = filt.outputs(traj.states, y)
    return FilterRun(times, eta_hat, x_hat, traj.states)
