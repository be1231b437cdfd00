"""
稳定性证书的独立复核
直接由 (系统, θ, P, 标量) 重建原始的非凸条件并计算特征值残差，不经过学习模块的 LMI 组装
  不变集：[[Δ+βP, P(B_u+S_ηl B_l), 0], [*, (l_gu+l̄_hu)I − αU, 0], [*, *, α−β]] ⪯ 0
          [[γF − P, 0], [*, 1 − γ]] ⪯ 0，l_hx‖Θ_n‖ ≤ l̄_hx
  ISS：  Δ ≺ 0，l_hx‖Θ_n‖ ≤ l̄_hx
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from certmodel.ellipsoids.ellipsoid import Ellipsoid, check_subset
from certmodel.models.extended import UncertaintyModel
from certmodel.models.system import SystemModel
from certmodel.sdp.linalg import SymMatrix
from certmodel.sdp.problem import DEFAULT_STRICT_EPS

logger = logging.getLogger(__name__)

# 复核容差 = 2 倍严格裕量（按块的 Frobenius 范数缩放）
TOLERANCE_FACTOR = 2.0
NORM_RTOL = 1e-6
BETA_GRID = np.logspace(-4, 2, 61)


@dataclass
class ConditionResidual:
    """单个条件的复核结果"""
    name: str
    value: float
    tolerance: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'value': self.value, 'tolerance': self.tolerance,
                'passed': self.passed}


@dataclass
class Certificate:
    """
    复核报告

    Attributes:
        kind: 'invariant-set' | 'iss'
        p: 证书矩阵
        scalars: 复核所用的标量
        residuals: 每个条件的 λ_max（或范数条件的 lhs − rhs）
        issues: 未通过的条件说明
    """
    kind: str
    p: SymMatrix
    scalars: Dict[str, float] = field(default_factory=dict)
    residuals: Dict[str, ConditionResidual] = field(default_factory=dict)
    issues: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.issues

    def add(self, name: str, value: float, tolerance: float) -> None:
        ok = bool(np.isfinite(value) and value <= tolerance)
        self.residuals[name] = ConditionResidual(name, float(value), float(tolerance), ok)
        if not ok:
            self.issues.append(f"{name}: {value:.6g} > {tolerance:.6g}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'passed': self.passed,
            'scalars': dict(self.scalars),
            'residuals': {k: r.to_dict() for k, r in self.residuals.items()},
            'issues': list(self.issues),
        }


def lipschitz_scalars(sys: SystemModel, scalars: Dict[str, float]) -> Dict[str, float]:
    """补齐 Lipschitz 标量；l̄_hu = l̄_hx·l_hu/l_hx"""
    out = {
        'l_gx': float(scalars.get('l_gx', sys.lipschitz_g[0])),
        'l_gu': float(scalars.get('l_gu', sys.lipschitz_g[1])),
        'l_hx': float(scalars.get('l_hx', 0.0)),
        'l_hu': float(scalars.get('l_hu', 0.0)),
        'l_hx_bar': float(scalars.get('l_hx_bar', 0.0)),
    }
    if 'l_hu_bar' in scalars:
        out['l_hu_bar'] = float(scalars['l_hu_bar'])
    else:
        out['l_hu_bar'] = out['l_hx_bar'] * out['l_hu'] / out['l_hx'] if out['l_hx'] > 0 else 0.0
    return out


def delta_matrix(sys: SystemModel, theta: UncertaintyModel, p: np.ndarray,
                 scalars: Dict[str, float]) -> np.ndarray:
    """
    Δ = AᵀP + PA + V_ηᵀΘ_lᵀS_ηlᵀP + PS_ηlΘ_lV_η + (l_gx+l_gu)PS_gS_gᵀP
        + (l̄_hx+l̄_hu)PS_ηlS_ηlᵀP + l_gx V_gᵀV_g + l̄_hx V_ηᵀV_η
    """
    lip = lipschitz_scalars(sys, scalars)
    p = np.asarray(p, dtype=float)
    s_l = theta.s_eta_l
    lin = p @ s_l @ theta.theta_l @ sys.v_eta
    delta = sys.a.T @ p + p @ sys.a + lin + lin.T
    if sys.n_g:
        ps = p @ sys.s_g
        delta += (lip['l_gx'] + lip['l_gu']) * (ps @ ps.T) + lip['l_gx'] * (sys.v_g.T @ sys.v_g)
    ph = p @ s_l
    delta += (lip['l_hx_bar'] + lip['l_hu_bar']) * (ph @ ph.T)
    delta += lip['l_hx_bar'] * (sys.v_eta.T @ sys.v_eta)
    return 0.5 * (delta + delta.T)


def invariance_block(sys: SystemModel, theta: UncertaintyModel, p: np.ndarray,
                     scalars: Dict[str, float], u_set: Optional[Ellipsoid],
                     alpha: float, beta: float) -> np.ndarray:
    """V̇ ≤ 0 在 S-procedure 下的 (n + l + 1) 维块矩阵"""
    lip = lipschitz_scalars(sys, scalars)
    n, l = sys.n, sys.l
    p = np.asarray(p, dtype=float)
    out = np.zeros((n + l + 1, n + l + 1))
    out[:n, :n] = delta_matrix(sys, theta, p, scalars) + beta * p
    if l:
        coupling = p @ (sys.b_u + theta.s_eta_l @ theta.b_l)
        u_shape = u_set.shape.array if u_set is not None else np.zeros((l, l))
        out[:n, n:n + l] = coupling
        out[n:n + l, :n] = coupling.T
        out[n:n + l, n:n + l] = (lip['l_gu'] + lip['l_hu_bar']) * np.eye(l) - alpha * u_shape
    out[-1, -1] = alpha - beta
    return out


def subset_block(p: np.ndarray, f_set: Ellipsoid, gamma: float) -> np.ndarray:
    """[[γF − P, 0], [0, 1 − γ]]"""
    n = p.shape[0]
    out = np.zeros((n + 1, n + 1))
    out[:n, :n] = gamma * f_set.shape.array - p
    out[-1, -1] = 1.0 - gamma
    return out


def _lam_max(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (m + m.T))[-1])


def _tolerance(m: np.ndarray, eps: float) -> float:
    return TOLERANCE_FACTOR * eps * max(1.0, float(np.linalg.norm(m)))


def _check_norm(cert: Certificate, sys: SystemModel, theta: UncertaintyModel,
                scalars: Dict[str, float]) -> None:
    lip = lipschitz_scalars(sys, scalars)
    norm = float(np.linalg.norm(theta.theta_n, 2)) if theta.theta_n.size else 0.0
    lhs = lip['l_hx'] * norm
    cert.add('theta-n-norm', lhs - lip['l_hx_bar'], NORM_RTOL * max(1.0, lip['l_hx_bar']))


def _check_positive(cert: Certificate, p: np.ndarray) -> bool:
    lam_min = float(np.linalg.eigvalsh(p)[0])
    cert.add('P>0', -lam_min, -np.finfo(float).tiny)
    return lam_min > 0


def _line_search_beta(sys: SystemModel, theta: UncertaintyModel, p: np.ndarray,
                      scalars: Dict[str, float], u_set: Optional[Ellipsoid]):
    """未给定 α, β 时取 α = β，对 β 做对数网格搜索"""
    best = None
    for beta in BETA_GRID:
        lam = _lam_max(invariance_block(sys, theta, p, scalars, u_set, beta, beta))
        if best is None or lam < best[0]:
            best = (lam, float(beta))
    logger.debug(f"β 线搜索: β = {best[1]:.4g}, λ_max = {best[0]:.4g}")
    return best[1], best[1]


def check_invariant_set(sys: SystemModel, theta: UncertaintyModel, p,
                        scalars: Dict[str, float], f_set: Ellipsoid,
                        u_set: Optional[Ellipsoid] = None,
                        eps: float = DEFAULT_STRICT_EPS) -> Certificate:
    """
    复核不变集条件

    Args:
        sys: 已知系统
        theta: 不确定性模型
        p: 证书矩阵 P
        scalars: α, β, γ, Lipschitz 常数与 l̄_hx（缺少 α/β 时线搜索，缺少 γ 时由包含关系确定）
        f_set: 系统集合 E_sys 的形状 F
        u_set: 输入集合 E_u 的形状 U（l = 0 时可省略）
        eps: 严格裕量

    Returns:
        Certificate（不抛出异常，失败记录在 issues 中）
    """
    p = SymMatrix(np.asarray(getattr(p, 'array', p), dtype=float), check=False).array
    used = dict(scalars)
    cert = Certificate('invariant-set', SymMatrix(p, check=False), used)
    if not _check_positive(cert, p):
        logger.warning("✗ P 不是正定的")
        return cert

    if 'alpha' in scalars and 'beta' in scalars:
        alpha, beta = float(scalars['alpha']), float(scalars['beta'])
    else:
        alpha, beta = _line_search_beta(sys, theta, p, scalars, u_set)
    if 'gamma' in scalars:
        gamma = float(scalars['gamma'])
    else:
        info = check_subset(Ellipsoid(SymMatrix(p, check=False)), f_set)
        gamma = 1.0 if info['holds'] else float(info['gamma'])
    used.update({'alpha': alpha, 'beta': beta, 'gamma': gamma})

    block = invariance_block(sys, theta, p, scalars, u_set, alpha, beta)
    cert.add('stability', _lam_max(block), _tolerance(block, eps))
    if alpha < 0 or gamma < 0:
        cert.issues.append(f"S-procedure 乘子必须非负: α = {alpha:.4g}, γ = {gamma:.4g}")
    subset = subset_block(p, f_set, gamma)
    cert.add('subset', _lam_max(subset), _tolerance(subset, eps))
    _check_norm(cert, sys, theta, scalars)
    _log(cert)
    return cert


def check_iss(sys: SystemModel, theta: UncertaintyModel, p, scalars: Optional[Dict[str, float]] = None,
              eps: float = DEFAULT_STRICT_EPS) -> Certificate:
    """
    复核 ISS 条件：λ_max(Δ) ≤ −ε/2 且 Θ_n 范数条件成立

    阈值只取复核方自己的 ε，文档中记录的 stability_margin 仅作报告

    Args:
        sys: 已知系统
        theta: 不确定性模型
        p: 证书矩阵 P
        scalars: Lipschitz 常数与 l̄_hx
        eps: 严格裕量
    """
    scalars = dict(scalars or {})
    p = np.asarray(getattr(p, 'array', p), dtype=float)
    p = 0.5 * (p + p.T)
    cert = Certificate('iss', SymMatrix(p, check=False), scalars)
    if not _check_positive(cert, p):
        logger.warning("✗ P 不是正定的")
        return cert
    cert.add('delta', _lam_max(delta_matrix(sys, theta, p, scalars)), -0.5 * eps)
    _check_norm(cert, sys, theta, scalars)
    _log(cert)
    return cert


def verify_result(sys: SystemModel, result, f_set: Optional[Ellipsoid] = None,
                  u_set: Optional[Ellipsoid] = None, eps: float = DEFAULT_STRICT_EPS) -> Certificate:
    """
    按证书类型复核一个学习结果

    Raises:
        ValueError: 学习结果没有证书，或不变集证书缺少 F
    """
    cert = result.certificate
    if cert is None:
        raise ValueError(f"{result.method} 的学习结果没有稳定性证书")
    if cert.kind == 'iss':
        return check_iss(sys, result.model, cert.p, cert.scalars, eps)
    if f_set is None:
        raise ValueError("复核不变集证书需要系统集合 F")
    return check_invariant_set(sys, result.model, cert.p, cert.scalars, f_set, u_set, eps)


def _log(cert: Certificate) -> None:
    if cert.passed:
        worst = max((r.value for r in cert.residuals.values() if r.name != 'P>0'), default=0.0)
        logger.info(f"✓ {cert.kind} 证书复核通过 (最大残差 {worst:.3g})")
    else:
        logger.warning(f"✗ {cert.kind} 证书复核失败: {'; '.join(cert.issues)}")
