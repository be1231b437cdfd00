"""
序列凸规划：交替固定 θ 与 P
Step 1 固定 θ，求 P（local 类同时求 α, γ）；P S Sᵀ P 形式的二次项经 Schur 补重排为 LMI
Step 2 固定 P（与 γ），在关于 θ 线性的稳定性约束下最小化 J
"""

import logging
from typing import Any, Dict, List, Optional

import cvxpy as cp
import numpy as np

from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.errors import ScpStepInfeasibleError
from certmodel.learning.config import LearnConfig, LearnResult, LipschitzBundle
from certmodel.learning.cost_mod import _var
from certmodel.learning.dataset import DataMatrix, LabeledDataset, build_data_matrix, cost
from certmodel.learning.search import resolve_lipschitz
from certmodel.models.extended import StabilityCertificate, UncertaintyModel
from certmodel.models.system import SystemModel
from certmodel.sdp.linalg import SymMatrix
from certmodel.sdp.problem import DEFAULT_STRICT_EPS, LmiProblem, SdpSolution, solve, sym_bmat

logger = logging.getLogger(__name__)

MONOTONE_TOL = 1e-8
CONVEX_INITS = ('cost-mod', 'constraint-mod')


def _stability_blocks(sys: SystemModel, p, m1, b_cl, s_eta_l: np.ndarray, lip: LipschitzBundle,
                      l_bar: float, model_class: str, beta: float, alpha, u_set: Optional[Ellipsoid]):
    """
    Δ + βP 及其 Schur 重排：
    [[M1 + βP, P B_cl, 0, √(l_gx+l_gu) P S_g, √(l̄_hx+l̄_hu) P S_ηl], [*, M22, 0, 0, 0], [*, *, α − β, 0, 0], ...]
    """
    n, l, n_g = sys.n, sys.l, sys.n_g
    n_etal = s_eta_l.shape[1]
    l_bar_u = lip.bar_hu(l_bar)
    c_g = np.sqrt(lip.gx + lip.gu)
    c_h = np.sqrt(l_bar + l_bar_u)
    m14 = c_g * (p @ sys.s_g) if c_g > 0 and n_g else None
    m15 = c_h * (p @ s_eta_l) if c_h > 0 and n_etal else None
    size_g = n_g if m14 is not None else 0
    size_h = n_etal if m15 is not None else 0

    if model_class == 'local':
        m12 = p @ b_cl if l else None
        m22 = (lip.gu + l_bar_u) * np.eye(l) - alpha * u_set.shape.array if l else None
        upper = [
            [m1 + beta * p, m12, None, m14, m15],
            [m22, None, None, None],
            [alpha - beta, None, None],
            [-np.eye(size_g), None],
            [-np.eye(size_h)],
        ]
        return sym_bmat(upper, [n, l, 1, size_g, size_h])
    upper = [
        [m1, m14, m15],
        [-np.eye(size_g), None],
        [-np.eye(size_h)],
    ]
    return sym_bmat(upper, [n, size_g, size_h])


def assemble_step1(sys: SystemModel, theta: UncertaintyModel, lip: LipschitzBundle,
                   hyper: Dict[str, float], model_class: str,
                   f_set: Optional[Ellipsoid] = None, u_set: Optional[Ellipsoid] = None,
                   strict_eps: float = DEFAULT_STRICT_EPS) -> LmiProblem:
    """固定 θ 的 P 可行性问题"""
    n = sys.n
    s_eta_l = theta.s_eta_l
    a_cl = sys.a + s_eta_l @ theta.theta_l @ sys.v_eta
    b_cl = sys.b_u + s_eta_l @ theta.b_l
    l_bar = lip.effective_bar(hyper['l_hx_bar'], theta.basis.n_h)

    prob = LmiProblem(f"scp-step1-{model_class}", strict_eps)
    p = prob.add_variable('P', (n, n), symmetric=True)
    m1 = (a_cl.T @ p + p @ a_cl + lip.gx * (sys.v_g.T @ sys.v_g)
          + l_bar * (sys.v_eta.T @ sys.v_eta))
    alpha = gamma = None
    if model_class == 'local':
        alpha = prob.add_variable('alpha', nonneg=True)
        gamma = prob.add_variable('gamma', nonneg=True)
    stability = _stability_blocks(sys, p, m1, b_cl, s_eta_l, lip, l_bar, model_class,
                                  hyper.get('beta', 0.0), alpha, u_set)
    prob.add_lmi('stability', stability, 'nd')
    if model_class == 'local':
        prob.add_lmi('subset', sym_bmat([[gamma * f_set.shape.array - p, None], [1 - gamma]], [n, 1]), 'nd')
    prob.add_lmi('P>0', p, 'pd')
    return prob


def assemble_step2(sys: SystemModel, p: np.ndarray, dm: DataMatrix, s_eta_l: np.ndarray,
                   lip: LipschitzBundle, hyper: Dict[str, float], model_class: str,
                   u_set: Optional[Ellipsoid] = None,
                   strict_eps: float = DEFAULT_STRICT_EPS) -> LmiProblem:
    """固定 P 的 θ 最小代价问题"""
    l = sys.l
    n_veta, _, n_etal, n_h = dm.sizes
    l_bar = lip.effective_bar(hyper['l_hx_bar'], n_h)
    p = np.asarray(p, dtype=float)

    prob = LmiProblem(f"scp-step2-{model_class}", strict_eps)
    theta_l = _var(prob, 'Theta_l', n_etal, n_veta)
    b_l = _var(prob, 'B_l', n_etal, l)
    theta_n = _var(prob, 'Theta_n', n_etal, n_h) if (l_bar > 0 or not lip.has_h) else None
    w = prob.add_variable('W', (n_etal, n_etal), symmetric=True)

    m1 = (sys.a.T @ p + p @ sys.a + lip.gx * (sys.v_g.T @ sys.v_g)
          + l_bar * (sys.v_eta.T @ sys.v_eta))
    if theta_l is not None:
        coupling = p @ s_eta_l @ theta_l @ sys.v_eta
        m1 = m1 + coupling + coupling.T
    b_cl = sys.b_u + s_eta_l @ b_l if b_l is not None else sys.b_u
    alpha = prob.add_variable('alpha', nonneg=True) if model_class == 'local' else None
    stability = _stability_blocks(sys, p, m1, b_cl, s_eta_l, lip, l_bar, model_class,
                                  hyper.get('beta', 0.0), alpha, u_set)
    prob.add_lmi('stability', stability, 'nd')

    if theta_n is not None and l_bar > 0:
        norm = sym_bmat([[l_bar * np.eye(n_h), lip.hx * theta_n.T],
                         [l_bar * np.eye(n_etal)]], [n_h, n_etal])
        prob.add_lmi('theta-n-norm', norm, 'pd')

    k = dm.factor.shape[0]
    parts = [theta_l, b_l, -np.eye(n_etal)]
    if n_h:
        parts.append(theta_n if theta_n is not None else np.zeros((n_etal, n_h)))
    parts = [x for x in parts if x is not None]
    block = cp.hstack(parts) @ dm.factor.T if k else None
    prob.add_lmi('cost', sym_bmat([[w, block], [np.eye(k)]], [n_etal, k]), 'psd')
    prob.minimize(cp.trace(w))
    return prob


def _read_theta(sol: SdpSolution, dm: DataMatrix, s_eta_l: np.ndarray, basis) -> UncertaintyModel:
    n_veta, l, n_etal, n_h = dm.sizes

    def read(name: str, cols: int) -> np.ndarray:
        if name not in sol.values or cols == 0:
            return np.zeros((n_etal, cols))
        return np.atleast_2d(sol.values[name]).reshape(n_etal, cols)

    return UncertaintyModel(read('Theta_l', n_veta), read('B_l', l), read('Theta_n', n_h), s_eta_l, basis)


def _certificate(p: np.ndarray, lip: LipschitzBundle, l_bar: float, hyper: Dict[str, float],
                 model_class: str, stability: SdpSolution, step1: SdpSolution) -> StabilityCertificate:
    scalars = {
        'l_gx': lip.gx, 'l_gu': lip.gu, 'l_hx': lip.hx, 'l_hu': lip.hu,
        'l_hx_bar': l_bar, 'l_hu_bar': lip.bar_hu(l_bar),
        'stability_margin': float(stability.margin('stability')),
    }
    if model_class == 'local':
        scalars.update({
            'alpha': float(stability.values['alpha']),
            'beta': float(hyper['beta']),
            'gamma': float(step1.values['gamma']),
            'subset_margin': float(step1.margin('subset')),
        })
    kind = 'invariant-set' if model_class == 'local' else 'iss'
    return StabilityCertificate(SymMatrix(p, check=False), kind, scalars)


def initial_model(sys: SystemModel, ds: LabeledDataset, cfg: LearnConfig) -> LearnResult:
    """cfg.scp_init 指定的初始化（'zero' 为 θ = 0）"""
    from certmodel.learning.constraint_mod import learn_constraint_mod
    from certmodel.learning.cost_mod import learn_cost_mod
    from certmodel.learning.unconstrained import learn_unconstrained

    if cfg.scp_init == 'cost-mod':
        return learn_cost_mod(sys, ds, cfg)
    if cfg.scp_init == 'constraint-mod':
        return learn_constraint_mod(sys, ds, cfg)
    if cfg.scp_init == 'unconstrained':
        return learn_unconstrained(ds, sys.s_eta)
    model = UncertaintyModel.zero(sys.s_eta, sys.l, ds.basis)
    return LearnResult(model=model, method='zero', model_class=None, certificate=None,
                       cost_bound=None, realized_cost=cost(model, build_data_matrix(ds)))


def learn_scp(sys: SystemModel, ds: LabeledDataset, cfg: LearnConfig,
              init: Optional[LearnResult] = None) -> LearnResult:
    """
    SCP 交替优化

    Args:
        sys: 已知系统
        ds: 数据集
        cfg: 学习配置（model_class、scp_rtol、scp_max_iters）
        init: 初始解；None 时按 cfg.scp_init 计算。非凸方法的初始化会被标记

    Returns:
        LearnResult（证书类型与 cfg.model_class 一致）

    Raises:
        ScpStepInfeasibleError: Step 1 或 Step 2 不可行（带步骤号与迭代号）
    """
    if init is None:
        init = initial_model(sys, ds, cfg)
    model_class = cfg.model_class
    flagged = init.method not in CONVEX_INITS
    if flagged:
        logger.warning(f"⚠ SCP 初始化来自 {init.method}，不保证 Step 1 可行")

    theta = init.model
    s_eta_l = theta.s_eta_l
    dm = build_data_matrix(ds, label_map=sys.s_eta if theta.lifted else None)
    lip = resolve_lipschitz(sys, ds.basis, cfg, model_class)

    hyper = {'l_hx_bar': float(init.hyper.get('l_hx_bar', cfg.first('l_hx_bar')))}
    if model_class == 'local':
        hyper['beta'] = float(init.hyper.get('beta', cfg.first('beta')))
    if lip.has_h and ds.basis.n_h:
        needed = lip.hx * float(np.linalg.norm(theta.theta_n, 2))
        if needed > hyper['l_hx_bar']:
            logger.info(f"l̄_hx 从 {hyper['l_hx_bar']:.4g} 放大到 {needed:.4g} 以覆盖初始 Θ_n")
            hyper['l_hx_bar'] = needed * (1.0 + 1e-6)
    l_bar = lip.effective_bar(hyper['l_hx_bar'], ds.basis.n_h)

    j_prev = cost(theta, dm)
    j_init = j_prev
    history: List[Dict[str, Any]] = [{'iteration': 0, 'cost': j_prev}]
    certificate: Optional[StabilityCertificate] = None
    cost_bound: Optional[float] = None
    converged = False
    monotone_violation = None
    iterations = 0

    for k in range(1, cfg.scp_max_iters + 1):
        iterations = k
        step1 = solve(assemble_step1(sys, theta, lip, hyper, model_class, cfg.f_set, cfg.u_set,
                                     cfg.strict_eps), tol=cfg.sdp_tol, solvers=cfg.solvers)
        if not step1.ok:
            logger.error(f"✗ SCP 第 {k} 轮 Step 1 不可行 ({step1.status})")
            raise ScpStepInfeasibleError(1, k, step1.status)
        p = step1.values['P']

        step2 = solve(assemble_step2(sys, p, dm, s_eta_l, lip, hyper, model_class, cfg.u_set,
                                     cfg.strict_eps), tol=cfg.sdp_tol, solvers=cfg.solvers)
        if not step2.ok:
            logger.error(f"✗ SCP 第 {k} 轮 Step 2 不可行 ({step2.status})")
            raise ScpStepInfeasibleError(2, k, step2.status)

        candidate = _read_theta(step2, dm, s_eta_l, ds.basis)
        j = cost(candidate, dm)
        if j > j_prev + MONOTONE_TOL * (1.0 + j_prev):
            # 保留上一轮 θ，它与本轮 Step 1 的 P 构成有效证书
            monotone_violation = {'iteration': k, 'previous': j_prev, 'candidate': j}
            logger.warning(f"⚠ SCP 第 {k} 轮代价上升 {j_prev:.10g} → {j:.10g}，回退并停止")
            certificate = _certificate(p, lip, l_bar, hyper, model_class, step1, step1)
            cost_bound = j_prev
            break

        theta = candidate
        certificate = _certificate(p, lip, l_bar, hyper, model_class, step2, step1)
        cost_bound = float(step2.objective)
        history.append({'iteration': k, 'cost': j, 'cost_bound': cost_bound})
        logger.debug(f"SCP 第 {k} 轮: J = {j:.10g}")
        if abs(j_prev - j) <= cfg.scp_rtol * (1.0 + j):
            j_prev = j
            converged = True
            break
        j_prev = j

    if converged:
        logger.info(f"✓ SCP 在第 {iterations} 轮收敛: J {j_init:.6g} → {j_prev:.6g}")
    elif monotone_violation is None:
        logger.warning(f"⚠ SCP 达到最大迭代数 {cfg.scp_max_iters}: J = {j_prev:.6g}")

    return LearnResult(
        model=theta,
        method='scp',
        model_class=model_class,
        certificate=certificate,
        cost_bound=cost_bound,
        realized_cost=j_prev,
        hyper=dict(hyper),
        diagnostics={
            'init_method': init.method,
            'non_convex_init': flagged,
            'history': history,
            'iterations': iterations,
            'converged': converged,
            'monotone_violation': monotone_violation,
            'lipschitz': lip.to_dict(),
        },
    )
