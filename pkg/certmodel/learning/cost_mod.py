"""
代价修改法：变量替换 S = PΘ_l, R = PB_l, Z = PΘ_n，S_ηl = I
稳定性条件保持原样、代价被上界 tr(W) 取代
- local：不变集证书（E_inv ⊂ E_sys，输入 u ∈ E_u）
- global：ISS 证书
"""

import logging
from typing import Any, Dict, Optional

import cvxpy as cp
import numpy as np
import scipy.linalg

from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.learning.config import GRID_LAYOUT, LearnConfig, LearnResult, LipschitzBundle, grid_points
from certmodel.learning.dataset import DataMatrix, LabeledDataset, build_data_matrix, cost
from certmodel.learning.search import collapse_overrides, grid_search, resolve_lipschitz
from certmodel.models.extended import StabilityCertificate, UncertaintyModel
from certmodel.models.system import SystemModel
from certmodel.sdp.linalg import SymMatrix
from certmodel.sdp.problem import DEFAULT_STRICT_EPS, LmiProblem, SdpSolution, sym_bmat

logger = logging.getLogger(__name__)


def _var(prob: LmiProblem, name: str, rows: int, cols: int) -> Optional[cp.Variable]:
    if rows == 0 or cols == 0:
        return None
    return prob.add_variable(name, (rows, cols))


def assemble_cost_mod(sys: SystemModel, dm: DataMatrix, lip: LipschitzBundle,
                      hyper: Dict[str, float], model_class: str,
                      f_set: Optional[Ellipsoid] = None, u_set: Optional[Ellipsoid] = None,
                      strict_eps: float = DEFAULT_STRICT_EPS,
                      with_cost: bool = True, with_norm: bool = True) -> LmiProblem:
    """
    组装代价修改法的 LMI 问题

    Args:
        sys: 已知系统
        dm: 提升标签（S_η η̂）上的数据矩阵
        lip: Lipschitz 常数
        hyper: l_hx_bar, beta（local）, mu1, mu2
        model_class: 'local' | 'global'
        f_set, u_set: local 类的 F、U
        strict_eps: 严格裕量
        with_cost: 是否包含代价约束与目标
        with_norm: 是否包含 Θ_n 范数约束

    Returns:
        LmiProblem（约束名: stability, subset, theta-n-norm, P>0, cost）
    """
    n, l, n_g = sys.n, sys.l, sys.n_g
    n_veta, _, n_label, n_h = dm.sizes
    if n_label != n:
        raise ValueError(f"代价修改法需要提升标签（维度 {n}），得到 {n_label}")

    l_bar = lip.effective_bar(hyper.get('l_hx_bar', 0.0), n_h)
    l_bar_u = lip.bar_hu(l_bar)
    a, v_eta, v_g = sys.a, sys.v_eta, sys.v_g

    prob = LmiProblem(f"cost-mod-{model_class}", strict_eps)
    p = prob.add_variable('P', (n, n), symmetric=True)
    s = _var(prob, 'S', n, n_veta)
    r = _var(prob, 'R', n, l)
    # l_hx = 0 时 Θ_n 不受范数约束
    z = _var(prob, 'Z', n, n_h) if (l_bar > 0 or not lip.has_h) else None

    m1 = a.T @ p + p @ a + lip.gx * (v_g.T @ v_g) + l_bar * (v_eta.T @ v_eta)
    if s is not None:
        m1 = m1 + s @ v_eta + (s @ v_eta).T
    c_g = np.sqrt(lip.gx + lip.gu)
    m14 = c_g * (p @ sys.s_g) if c_g > 0 and n_g else None
    c_h = np.sqrt(l_bar + l_bar_u)
    m15 = c_h * p if c_h > 0 else None
    size_g = n_g if m14 is not None else 0
    size_h = n if m15 is not None else 0

    if model_class == 'local':
        beta = hyper['beta']
        alpha = prob.add_variable('alpha', nonneg=True)
        gamma = prob.add_variable('gamma', nonneg=True)
        m12 = None
        m22 = None
        if l:
            m12 = p @ sys.b_u + r
            m22 = (lip.gu + l_bar_u) * np.eye(l) - alpha * u_set.shape.array
        upper = [
            [m1 + beta * p, m12, None, m14, m15],
            [m22, None, None, None],
            [alpha - beta, None, None],
            [-np.eye(size_g), None],
            [-np.eye(size_h)],
        ]
        prob.add_lmi('stability', sym_bmat(upper, [n, l, 1, size_g, size_h]), 'nd')
        subset = sym_bmat([[gamma * f_set.shape.array - p, None], [1 - gamma]], [n, 1])
        prob.add_lmi('subset', subset, 'nd')
    else:
        upper = [
            [m1, m14, m15],
            [-np.eye(size_g), None],
            [-np.eye(size_h)],
        ]
        prob.add_lmi('stability', sym_bmat(upper, [n, size_g, size_h]), 'nd')

    if with_norm and z is not None and l_bar > 0:
        mu1 = hyper['mu1']
        norm = sym_bmat([[l_bar * np.eye(n_h), lip.hx * z.T],
                         [l_bar * (2 * mu1 * p - mu1 ** 2 * np.eye(n))]], [n_h, n])
        prob.add_lmi('theta-n-norm', norm, 'pd')
    prob.add_lmi('P>0', p, 'pd')

    if with_cost:
        mu2 = hyper['mu2']
        w = prob.add_variable('W', (n, n), symmetric=True)
        k = dm.factor.shape[0]
        parts = [s, r, -p]
        if n_h:
            # Θ_n 被剔除时（l̄_hx = 0）数据中的 h 列乘以零
            parts.append(z if z is not None else np.zeros((n, n_h)))
        parts = [x for x in parts if x is not None]
        block = cp.hstack(parts) @ dm.factor.T if k else None
        cost_lmi = sym_bmat([[2 * mu2 * p, block, mu2 * np.eye(n)],
                             [np.eye(k), None],
                             [w]], [n, k, n])
        prob.add_lmi('cost', cost_lmi, 'psd')
        prob.minimize(cp.trace(w))
    return prob


def recover_cost_mod(sol: SdpSolution, sys: SystemModel, dm: DataMatrix, basis) -> UncertaintyModel:
    """Θ_l = P⁻¹S, B_l = P⁻¹R, Θ_n = P⁻¹Z，S_ηl = I"""
    n = sys.n
    n_veta, l, _, n_h = dm.sizes
    p = sol.values['P']

    def back(name: str, cols: int) -> np.ndarray:
        if name not in sol.values or cols == 0:
            return np.zeros((n, cols))
        return scipy.linalg.solve(p, np.atleast_2d(sol.values[name]).reshape(n, cols), assume_a='pos')

    return UncertaintyModel(back('S', n_veta), back('R', l), back('Z', n_h), np.eye(n), basis)


def certificate_scalars(sol: SdpSolution, lip: LipschitzBundle, l_bar: float,
                        hyper: Dict[str, float], model_class: str,
                        stability_margin: float) -> Dict[str, float]:
    """证书中记录的标量（verify 据此重建原始条件）"""
    scalars = {
        'l_gx': lip.gx, 'l_gu': lip.gu, 'l_hx': lip.hx, 'l_hu': lip.hu,
        'l_hx_bar': l_bar, 'l_hu_bar': lip.bar_hu(l_bar),
        'stability_margin': float(stability_margin),
    }
    if model_class == 'local':
        scalars.update({
            'alpha': float(sol.values['alpha']),
            'beta': float(hyper['beta']),
            'gamma': float(sol.values['gamma']),
            'subset_margin': float(sol.margin('subset')),
        })
    return scalars


def learn_cost_mod(sys: SystemModel, ds: LabeledDataset, cfg: LearnConfig,
                   model_class: Optional[str] = None) -> LearnResult:
    """
    代价修改法学习

    Args:
        sys: 已知系统
        ds: 数据集
        cfg: 学习配置
        model_class: 覆盖 cfg.model_class

    Returns:
        LearnResult（S_ηl = I）

    Raises:
        SdpInfeasibleError: 所有网格点均不可行
    """
    model_class = model_class or cfg.model_class
    dm = build_data_matrix(ds, label_map=sys.s_eta)
    lip = resolve_lipschitz(sys, ds.basis, cfg, model_class)
    outer_names, inner_names = GRID_LAYOUT[('cost-mod', model_class)]
    overrides = collapse_overrides(lip, dm.sizes[3], cfg, 'mu1')
    outer = grid_points(outer_names, cfg, overrides)
    inner = grid_points(inner_names, cfg, overrides)
    logger.info(f"代价修改法 ({model_class}): 扫描 {len(outer)} × {len(inner)} 个网格点")

    def build(hyper):
        return assemble_cost_mod(sys, dm, lip, hyper, model_class, cfg.f_set, cfg.u_set, cfg.strict_eps)

    def precheck(hyper):
        return assemble_cost_mod(sys, dm, lip, hyper, model_class, cfg.f_set, cfg.u_set, cfg.strict_eps,
                                 with_cost=False, with_norm=False)

    outcome = grid_search(build, outer, inner, precheck, tol=cfg.sdp_tol, solvers=cfg.solvers,
                          workers=cfg.workers, label=f"cost-mod-{model_class}")
    best = outcome.best
    sol = best.solution
    model = recover_cost_mod(sol, sys, dm, ds.basis)
    realized = cost(model, dm)

    l_bar = lip.effective_bar(best.hyper['l_hx_bar'], dm.sizes[3])
    kind = 'invariant-set' if model_class == 'local' else 'iss'
    scalars = certificate_scalars(sol, lip, l_bar, best.hyper, model_class, sol.margin('stability'))
    certificate = StabilityCertificate(SymMatrix(sol.values['P'], check=False), kind, scalars)

    result = LearnResult(
        model=model,
        method='cost-mod',
        model_class=model_class,
        certificate=certificate,
        cost_bound=best.cost_bound,
        realized_cost=realized,
        hyper=dict(best.hyper),
        diagnostics=_diagnostics(outcome, sol, lip, dm),
    )
    _log_bound(result)
    return result


def learn_cost_mod_local(sys: SystemModel, ds: LabeledDataset, cfg: LearnConfig) -> LearnResult:
    return learn_cost_mod(sys, ds, cfg, 'local')


def learn_cost_mod_global(sys: SystemModel, ds: LabeledDataset, cfg: LearnConfig) -> LearnResult:
    return learn_cost_mod(sys, ds, cfg, 'global')


def _diagnostics(outcome, sol: SdpSolution, lip: LipschitzBundle, dm: DataMatrix) -> Dict[str, Any]:
    return {
        'grid': outcome.table(),
        'residuals': {name: r.to_dict() for name, r in sol.residuals.items()},
        'solver': sol.solver,
        'lipschitz': lip.to_dict(),
        'n_samples': dm.n_samples,
        'rank_d': int(dm.factor.shape[0]),
    }


def _log_bound(result: LearnResult) -> None:
    if result.bound_holds():
        logger.info(f"✓ {result.method} ({result.model_class}): J = {result.realized_cost:.6g} "
                    f"≤ tr(W) = {result.cost_bound:.6g}")
    else:
        logger.warning(f"⚠ {result.method} ({result.model_class}): J = {result.realized_cost:.6g} "
                       f"超过 tr(W) = {result.cost_bound:.6g}")
