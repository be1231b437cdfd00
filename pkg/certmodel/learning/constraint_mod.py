"""
约束修改法：在 Q = P⁻¹ 坐标下收紧稳定性条件，θ 直接作为决策变量，S_ηl = S_η
代价通过 Schur 形式的上境图 tr(T D Tᵀ) ≤ tr(W) 精确表示
要求 A 是 Hurwitz 的
"""

import logging
from typing import Dict, Optional

import cvxpy as cp
import numpy as np

from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.errors import NotHurwitzError
from certmodel.learning.config import GRID_LAYOUT, LearnConfig, LearnResult, LipschitzBundle, grid_points
from certmodel.learning.cost_mod import _diagnostics, _log_bound, _var, certificate_scalars
from certmodel.learning.dataset import DataMatrix, LabeledDataset, build_data_matrix, cost
from certmodel.learning.search import collapse_overrides, grid_search, resolve_lipschitz
from certmodel.models.extended import StabilityCertificate, UncertaintyModel
from certmodel.models.system import SystemModel
from certmodel.sdp.linalg import SymMatrix, is_hurwitz
from certmodel.sdp.problem import DEFAULT_STRICT_EPS, LmiProblem, SdpSolution, sym_bmat

logger = logging.getLogger(__name__)


def require_hurwitz(a: np.ndarray) -> None:
    """
    Raises:
        NotHurwitzError: A 有实部 ≥ 0 的特征值
    """
    if not is_hurwitz(a):
        worst = float(np.max(np.linalg.eigvals(a).real))
        raise NotHurwitzError(f"约束修改法要求 A 为 Hurwitz 矩阵 (max Re λ = {worst:.4g})")


def assemble_constraint_mod(sys: SystemModel, dm: DataMatrix, lip: LipschitzBundle,
                            hyper: Dict[str, float], model_class: str,
                            f_set: Optional[Ellipsoid] = None, u_set: Optional[Ellipsoid] = None,
                            strict_eps: float = DEFAULT_STRICT_EPS,
                            with_cost: bool = True, with_aux: bool = True) -> LmiProblem:
    """
    组装约束修改法的 LMI 问题

    Args:
        sys: 已知系统
        dm: 原始标签（η̂）上的数据矩阵
        lip: Lipschitz 常数
        hyper: l_hx_bar, gamma_bar, beta（local）, mu3（local）
        model_class: 'local' | 'global'
        f_set, u_set: local 类的 F、U
        strict_eps: 严格裕量
        with_cost: 是否包含上境图约束与目标
        with_aux: 是否包含 Θ_n 范数约束与集合包含约束

    Returns:
        LmiProblem（约束名: stability, subset, theta-n-norm, Q>0, cost）
    """
    n, l = sys.n, sys.l
    n_eta, n_vg = sys.n_eta, sys.n_vg
    n_veta, _, n_label, n_h = dm.sizes
    if n_label != n_eta:
        raise ValueError(f"约束修改法使用原始标签（维度 {n_eta}），得到 {n_label}")

    l_bar = lip.effective_bar(hyper.get('l_hx_bar', 0.0), n_h)
    l_bar_u = lip.bar_hu(l_bar)
    gamma_bar = hyper['gamma_bar']
    a, s_eta, s_g = sys.a, sys.s_eta, sys.s_g

    prob = LmiProblem(f"constraint-mod-{model_class}", strict_eps)
    q = prob.add_variable('Q', (n, n), symmetric=True)
    theta_l = _var(prob, 'Theta_l', n_eta, n_veta)
    b_l = _var(prob, 'B_l', n_eta, l)
    theta_n = _var(prob, 'Theta_n', n_eta, n_h) if (l_bar > 0 or not lip.has_h) else None

    n1 = (a @ q + q @ a.T + (lip.gx + lip.gu) * (s_g @ s_g.T)
          + (l_bar + l_bar_u) * (s_eta @ s_eta.T))
    n14 = gamma_bar * q
    if theta_l is not None:
        n14 = s_eta @ theta_l @ sys.v_eta + n14
    n15 = np.sqrt(lip.gx) * (q @ sys.v_g.T) if lip.gx > 0 and n_vg else None
    n16 = np.sqrt(l_bar) * (q @ sys.v_eta.T) if l_bar > 0 and n_veta else None
    size_g = n_vg if n15 is not None else 0
    size_h = n_veta if n16 is not None else 0

    if model_class == 'local':
        beta = hyper['beta']
        alpha = prob.add_variable('alpha', nonneg=True)
        gamma = prob.add_variable('gamma', nonneg=True)
        n12 = None
        n22 = None
        if l:
            n12 = sys.b_u + s_eta @ b_l if b_l is not None else sys.b_u
            n22 = (lip.gu + l_bar_u) * np.eye(l) - alpha * u_set.shape.array
        upper = [
            [n1 + beta * q, n12, None, n14, n15, n16],
            [n22, None, None, None, None],
            [alpha - beta, None, None, None],
            [-2 * gamma_bar * np.eye(n), None, None],
            [-np.eye(size_g), None],
            [-np.eye(size_h)],
        ]
        prob.add_lmi('stability', sym_bmat(upper, [n, l, 1, n, size_g, size_h]), 'nd')
        if with_aux:
            mu3 = hyper['mu3']
            subset = sym_bmat([[gamma * f_set.shape.array - 2 * mu3 * np.eye(n) + mu3 ** 2 * q, None],
                               [1 - gamma]], [n, 1])
            prob.add_lmi('subset', subset, 'nd')
    else:
        upper = [
            [n1, n14, n15, n16],
            [-2 * gamma_bar * np.eye(n), None, None],
            [-np.eye(size_g), None],
            [-np.eye(size_h)],
        ]
        prob.add_lmi('stability', sym_bmat(upper, [n, n, size_g, size_h]), 'nd')

    if with_aux and theta_n is not None and l_bar > 0:
        norm = sym_bmat([[l_bar * np.eye(n_h), lip.hx * theta_n.T],
                         [l_bar * np.eye(n_eta)]], [n_h, n_eta])
        prob.add_lmi('theta-n-norm', norm, 'pd')
    prob.add_lmi('Q>0', q, 'pd')

    if with_cost:
        w = prob.add_variable('W', (n_eta, n_eta), symmetric=True)
        k = dm.factor.shape[0]
        parts = [theta_l, b_l, -np.eye(n_eta)]
        if n_h:
            parts.append(theta_n if theta_n is not None else np.zeros((n_eta, n_h)))
        parts = [x for x in parts if x is not None]
        block = cp.hstack(parts) @ dm.factor.T if k else None
        prob.add_lmi('cost', sym_bmat([[w, block], [np.eye(k)]], [n_eta, k]), 'psd')
        prob.minimize(cp.trace(w))
    return prob


def recover_constraint_mod(sol: SdpSolution, sys: SystemModel, dm: DataMatrix, basis) -> UncertaintyModel:
    """θ 直接读取，S_ηl = S_η"""
    n_veta, l, n_eta, n_h = dm.sizes

    def read(name: str, cols: int) -> np.ndarray:
        if name not in sol.values or cols == 0:
            return np.zeros((n_eta, cols))
        return np.atleast_2d(sol.values[name]).reshape(n_eta, cols)

    return UncertaintyModel(read('Theta_l', n_veta), read('B_l', l), read('Theta_n', n_h),
                            sys.s_eta, basis)


def learn_constraint_mod(sys: SystemModel, ds: LabeledDataset, cfg: LearnConfig,
                         model_class: Optional[str] = None) -> LearnResult:
    """
    约束修改法学习

    Args:
        sys: 已知系统（A 必须 Hurwitz）
        ds: 数据集
        cfg: 学习配置
        model_class: 覆盖 cfg.model_class

    Returns:
        LearnResult（证书 P = Q*⁻¹）

    Raises:
        NotHurwitzError: A 不是 Hurwitz 的（求解前检查）
        SdpInfeasibleError: 所有网格点均不可行
    """
    model_class = model_class or cfg.model_class
    require_hurwitz(sys.a)
    dm = build_data_matrix(ds)
    lip = resolve_lipschitz(sys, ds.basis, cfg, model_class)
    outer_names, inner_names = GRID_LAYOUT[('constraint-mod', model_class)]
    overrides = collapse_overrides(lip, dm.sizes[3], cfg, None)
    outer = grid_points(outer_names, cfg, overrides)
    inner = grid_points(inner_names, cfg, overrides)
    logger.info(f"约束修改法 ({model_class}): 扫描 {len(outer)} × {len(inner)} 个网格点")

    def build(hyper):
        return assemble_constraint_mod(sys, dm, lip, hyper, model_class, cfg.f_set, cfg.u_set,
                                       cfg.strict_eps)

    def precheck(hyper):
        return assemble_constraint_mod(sys, dm, lip, hyper, model_class, cfg.f_set, cfg.u_set,
                                       cfg.strict_eps, with_cost=False, with_aux=False)

    outcome = grid_search(build, outer, inner, precheck if inner_names else None,
                          tol=cfg.sdp_tol, solvers=cfg.solvers, workers=cfg.workers,
                          label=f"constraint-mod-{model_class}")
    best = outcome.best
    sol = best.solution
    model = recover_constraint_mod(sol, sys, dm, ds.basis)
    realized = cost(model, dm)

    q = sol.values['Q']
    p = np.linalg.inv(q)
    p = 0.5 * (p + p.T)
    # Q 坐标下的裕量经合同变换后按 λ_min(P)² 缩小
    shrink = min(1.0, float(np.linalg.eigvalsh(p)[0]) ** 2)
    l_bar = lip.effective_bar(best.hyper['l_hx_bar'], dm.sizes[3])
    kind = 'invariant-set' if model_class == 'local' else 'iss'
    scalars = certificate_scalars(sol, lip, l_bar, best.hyper, model_class,
                                  sol.margin('stability') * shrink)
    scalars['gamma_bar'] = float(best.hyper['gamma_bar'])
    certificate = StabilityCertificate(SymMatrix(p, check=False), kind, scalars)

    result = LearnResult(
        model=model,
        method='constraint-mod',
        model_class=model_class,
        certificate=certificate,
        cost_bound=best.cost_bound,
        realized_cost=realized,
        hyper=dict(best.hyper),
        diagnostics=_diagnostics(outcome, sol, lip, dm),
    )
    _log_bound(result)
    return result


def learn_constraint_mod_local(sys: SystemModel, ds: LabeledDataset, cfg: LearnConfig) -> LearnResult:
    return learn_constraint_mod(sys, ds, cfg, 'local')


def learn_constraint_mod_global(sys: SystemModel, ds: LabeledDataset, cfg: LearnConfig) -> LearnResult:
    return learn_constraint_mod(sys, ds, cfg, 'global')
