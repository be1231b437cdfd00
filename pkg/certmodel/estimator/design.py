"""
不确定性-状态估计器的 SDP 设计
min ρ  s.t. ISS 约束、L2 增益约束（ω_a → e_d）、L2–L∞ 约束（ν_a → e_d）、[[Π, C̄ᵀ], [*, σI]] ⪰ 0, σ ≤ σ_max
恢复 E = Π⁻¹R̄, K = Π⁻¹Q̄
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import cvxpy as cp
import numpy as np
import scipy.linalg

from certmodel.errors import ConfigError, SdpInfeasibleError
from certmodel.estimator.augment import AugmentedSystem
from certmodel.estimator.filter import EstimatorFilter
from certmodel.sdp.problem import DEFAULT_STRICT_EPS, DEFAULT_TOL, LmiProblem, solve, sym_bmat

logger = logging.getLogger(__name__)

# 逐步加入的约束块，用于定位不可行的来源
BLOCK_ORDER = ('iss', 'l2-gain', 'noise-gain', 'sigma-bound')


@dataclass(frozen=True)
class EstimatorConfig:
    """
    估计器配置

    Attributes:
        r: Taylor 阶数
        a: L2 增益约束中的标量 a > 0
        b: L2–L∞ 约束中的标量 b > 0
        sigma_max: σ 上限
        strict_eps: 严格 LMI 裕量
        sdp_tol: 残差容差
    """
    r: int = 3
    a: float = 1.0
    b: float = 1.0
    sigma_max: float = 1e3
    strict_eps: float = DEFAULT_STRICT_EPS
    sdp_tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.r < 1:
            raise ConfigError(f"estimator.r: 必须 ≥ 1 ({self.r})")
        if not self.a > 0:
            raise ConfigError(f"estimator.a: 必须为正 ({self.a})")
        if not self.b > 0:
            raise ConfigError(f"estimator.b: 必须为正 ({self.b})")
        if not self.sigma_max > 0:
            raise ConfigError(f"estimator.sigma_max: 必须为正 ({self.sigma_max})")

    def to_dict(self) -> Dict[str, Any]:
        return {'r': self.r, 'a': self.a, 'b': self.b, 'sigma_max': self.sigma_max,
                'strict_eps': self.strict_eps, 'sdp_tol': self.sdp_tol}


def noise_gain_bound(b: float, sigma: float) -> float:
    """L2–L∞ 增益上界 √(bσ)"""
    return float(np.sqrt(float(b) * max(float(sigma), 0.0)))


def assemble_estimator(aug: AugmentedSystem, l_gx: float, cfg: EstimatorConfig,
                       blocks: Tuple[str, ...] = BLOCK_ORDER) -> LmiProblem:
    """
    组装估计器设计 SDP

    Args:
        aug: 增广系统
        l_gx: g 关于 x 的 Lipschitz 常数（为 0 时所有 Lipschitz 块被删除）
        cfg: 估计器配置
        blocks: 包含的约束块

    Returns:
        LmiProblem（变量 Pi, R_bar, Q_bar, H, rho, sigma；目标 ρ）
    """
    sys = aug.system
    n_z, m = aug.n_z, sys.m
    n_g, n_vg = sys.n_g, sys.n_vg
    a_a, c_a, c_bar = aug.a_a, aug.c_a, aug.c_bar
    d_nu = sys.d_nu
    m_nu = d_nu.shape[1]

    prob = LmiProblem('estimator', cfg.strict_eps)
    pi = prob.add_variable('Pi', (n_z, n_z), symmetric=True)
    r_bar = prob.add_variable('R_bar', (n_z, m))
    q_bar = prob.add_variable('Q_bar', (n_z, m))
    rho = prob.add_variable('rho', nonneg=True)
    sigma = prob.add_variable('sigma', nonneg=True)
    lipschitz = l_gx > 0 and n_g > 0 and n_vg > 0
    h = prob.add_variable('H', (n_vg, m)) if lipschitz else None

    pi_r = pi + r_bar @ c_a
    x11 = (a_a.T @ pi + a_a.T @ c_a.T @ r_bar.T - c_a.T @ q_bar.T
           + pi @ a_a + r_bar @ c_a @ a_a - q_bar @ c_a)
    if lipschitz:
        v_ga = aug.v_ga
        cross = v_ga.T @ h @ c_a
        x11 = x11 + l_gx * (v_ga.T @ v_ga) - l_gx * (cross + cross.T)
        x12_g = np.sqrt(2 * l_gx) * (pi_r @ aug.s_ga)
        x12_h = np.sqrt(l_gx) * (h @ c_a).T
        size_g, size_h = n_g, n_vg
    else:
        x12_g = x12_h = None
        size_g = size_h = 0

    if 'iss' in blocks:
        upper = [
            [x11, x12_g, x12_h],
            [-np.eye(size_g), None],
            [-np.eye(size_h)],
        ]
        prob.add_lmi('iss', sym_bmat(upper, [n_z, size_g, size_h]), 'nd')

    if 'l2-gain' in blocks:
        n_wa = aug.b_omega_a.shape[1]
        upper = [
            [x11 + cfg.a * (c_bar.T @ c_bar), -(pi_r @ aug.b_omega_a), x12_g, x12_h],
            [-cfg.a * rho * np.eye(n_wa), None, None],
            [-np.eye(size_g), None],
            [-np.eye(size_h)],
        ]
        prob.add_lmi('l2-gain', sym_bmat(upper, [n_z, n_wa, size_g, size_h]), 'nsd')

    if 'noise-gain' in blocks:
        h12 = cp.hstack([q_bar @ d_nu, -(r_bar @ d_nu)])
        t_nu = np.hstack([d_nu, np.zeros((m, m_nu))])
        coupling = t_nu.T @ h.T if lipschitz else None
        size_c = n_vg if lipschitz else 0
        upper = [
            [x11, h12, None, x12_g, x12_h],
            [-cfg.b ** 2 * np.eye(2 * m_nu), coupling, None, None],
            [-np.eye(size_c), None, None],
            [-np.eye(size_g), None],
            [-np.eye(size_h)],
        ]
        prob.add_lmi('noise-gain', sym_bmat(upper, [n_z, 2 * m_nu, size_c, size_g, size_h]), 'nsd')

    if 'sigma-bound' in blocks:
        k = c_bar.shape[0]
        prob.add_lmi('output-bound', sym_bmat([[pi, c_bar.T], [sigma * np.eye(k)]], [n_z, k]), 'psd')
        prob.add_lmi('sigma<=max', cfg.sigma_max - sigma, 'psd')
    prob.add_lmi('Pi>0', pi, 'pd')
    prob.minimize(rho)
    return prob


def _locate_infeasible(aug: AugmentedSystem, l_gx: float, cfg: EstimatorConfig) -> str:
    """逐块加入约束，返回第一个导致不可行的块"""
    for i in range(len(BLOCK_ORDER)):
        sol = solve(assemble_estimator(aug, l_gx, cfg, BLOCK_ORDER[:i + 1]), tol=cfg.sdp_tol)
        if not sol.ok:
            return BLOCK_ORDER[i]
    return 'unknown'


def design_filter(aug: AugmentedSystem, l_gx: float, cfg: EstimatorConfig) -> EstimatorFilter:
    """
    求解估计器设计 SDP 并恢复增益

    Args:
        aug: 增广系统
        l_gx: g 的 Lipschitz 常数
        cfg: 估计器配置

    Returns:
        EstimatorFilter（bounds 含 ρ*, σ*, √ρ*, 噪声增益上界）

    Raises:
        SdpInfeasibleError: 不可行（消息中给出首个不可行的约束块）
    """
    if cfg.r != aug.r:
        logger.warning(f"⚠ 配置 r = {cfg.r} 与增广系统 r = {aug.r} 不一致，以增广系统为准")
    sys = aug.system
    sol = solve(assemble_estimator(aug, l_gx, cfg), tol=cfg.sdp_tol)
    if not sol.ok:
        block = _locate_infeasible(aug, l_gx, cfg)
        logger.error(f"✗ 估计器设计失败 ({sol.status})，约束块 {block}")
        raise SdpInfeasibleError(f"估计器设计不可行 ({sol.status})，首个不可行约束块: {block}")

    pi = sol.values['Pi']
    r_bar = np.atleast_2d(sol.values['R_bar']).reshape(aug.n_z, sys.m)
    q_bar = np.atleast_2d(sol.values['Q_bar']).reshape(aug.n_z, sys.m)
    e = scipy.linalg.solve(pi, r_bar, assume_a='pos')
    k = scipy.linalg.solve(pi, q_bar, assume_a='pos')
    h = (np.atleast_2d(sol.values['H']).reshape(sys.n_vg, sys.m) if 'H' in sol.values
         else np.zeros((sys.n_vg, sys.m)))

    rho = float(sol.values['rho'])
    sigma = float(sol.values['sigma'])
    if sigma >= cfg.sigma_max * (1.0 - 1e-6):
        logger.warning(f"⚠ σ* = {sigma:.6g} 达到上限 σ_max = {cfg.sigma_max:.6g}")
    bounds = {
        'rho': rho,
        'sigma': sigma,
        'b': float(cfg.b),
        'l2_gain': float(np.sqrt(rho)),
        'noise_gain': noise_gain_bound(cfg.b, sigma),
    }
    logger.info(f"✓ 估计器设计完成 (r = {aug.r}, n_z = {aug.n_z}): "
                f"√ρ* = {bounds['l2_gain']:.4g}, 噪声增益 ≤ {bounds['noise_gain']:.4g}")
    diagnostics = {
        'solver': sol.solver,
        'residuals': {name: res.to_dict() for name, res in sol.residuals.items()},
        'config': cfg.to_dict(),
    }
    return EstimatorFilter(aug, e, k, h, l_gx, bounds, diagnostics)
