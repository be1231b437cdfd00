"""
标量超参数的网格扫描
外层标量（稳定性相关）先做一次不含代价约束的可行性预检，不可行则整组剪枝；
各外层组之间并发求解。
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.errors import SdpInfeasibleError
from certmodel.learning.config import LearnConfig, LipschitzBundle
from certmodel.models.basis import BasisLibrary
from certmodel.models.system import SystemModel
from certmodel.sdp.problem import LmiProblem, SdpSolution, solve

logger = logging.getLogger(__name__)

ProblemBuilder = Callable[[Dict[str, float]], LmiProblem]


@dataclass
class GridPoint:
    """单个网格点的求解记录"""
    hyper: Dict[str, float]
    status: str
    cost_bound: float = float('inf')
    solve_time: float = 0.0
    solution: Optional[SdpSolution] = None

    @property
    def feasible(self) -> bool:
        return self.solution is not None and self.solution.ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            'hyper': dict(self.hyper),
            'status': self.status,
            'cost_bound': self.cost_bound if np.isfinite(self.cost_bound) else None,
            'solve_time': round(self.solve_time, 4),
        }


@dataclass
class GridOutcome:
    """扫描结果：最优点 + 全部网格记录"""
    best: GridPoint
    points: List[GridPoint] = field(default_factory=list)

    def table(self) -> List[Dict[str, Any]]:
        return [p.to_dict() for p in self.points]


def grid_search(build: ProblemBuilder, outer: Sequence[Dict[str, float]],
                inner: Sequence[Dict[str, float]], precheck: Optional[ProblemBuilder] = None,
                tol: float = 1e-6, solvers: Optional[Sequence[str]] = None,
                workers: int = 1, label: str = 'grid') -> GridOutcome:
    """
    在 outer × inner 网格上求解，返回 tr(W) 最小的可行点

    Args:
        build: 超参数 -> 完整问题（目标为 tr(W)）
        outer: 外层网格点
        inner: 内层网格点（至少包含一个空字典）
        precheck: 外层超参数 -> 松弛的稳定性问题
        tol: 残差容差
        solvers: 求解器优先级
        workers: 并发数
        label: 日志标签

    Returns:
        GridOutcome

    Raises:
        SdpInfeasibleError: 所有网格点均不可行
    """
    inner = list(inner) or [{}]

    def scan_group(outer_hyper: Dict[str, float]) -> List[GridPoint]:
        if precheck is not None:
            start = time.perf_counter()
            pre = solve(precheck(outer_hyper), tol=tol, solvers=solvers)
            if pre.status == 'infeasible':
                logger.debug(f"⊘ {label} {outer_hyper}: 稳定性预检不可行，剪枝 {len(inner)} 个点")
                elapsed = time.perf_counter() - start
                return [GridPoint({**outer_hyper, **h}, 'pruned', solve_time=elapsed) for h in inner]
        group = []
        for inner_hyper in inner:
            hyper = {**outer_hyper, **inner_hyper}
            start = time.perf_counter()
            try:
                sol = solve(build(hyper), tol=tol, solvers=solvers)
            except Exception as e:
                logger.debug(f"✗ {label} {hyper}: 求解异常 {e}")
                group.append(GridPoint(hyper, 'solver-error', solve_time=time.perf_counter() - start))
                continue
            elapsed = time.perf_counter() - start
            if sol.ok:
                group.append(GridPoint(hyper, sol.status, float(sol.objective), elapsed, sol))
            else:
                group.append(GridPoint(hyper, sol.status, solve_time=elapsed))
            logger.debug(f"{label} {hyper}: {sol.status}, tr(W) = {group[-1].cost_bound:.6g}")
        return group

    outer = list(outer)
    if workers > 1 and len(outer) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            groups = list(pool.map(scan_group, outer))
    else:
        groups = [scan_group(h) for h in outer]
    points = [p for group in groups for p in group]

    feasible = [p for p in points if p.feasible]
    counts: Dict[str, int] = {}
    for p in points:
        counts[p.status] = counts.get(p.status, 0) + 1
    if not feasible:
        logger.error(f"✗ {label}: {len(points)} 个网格点全部不可行 {counts}")
        raise SdpInfeasibleError(f"{label}: 所有网格点均不可行 {counts}")

    # 并列时取扫描顺序中的第一个
    best = min(feasible, key=lambda p: p.cost_bound)
    logger.info(f"✓ {label}: {len(feasible)}/{len(points)} 个网格点可行, "
                f"最优 tr(W) = {best.cost_bound:.6g} @ {best.hyper}")
    return GridOutcome(best=best, points=points)


def feature_radius(f_set: Ellipsoid, v_eta: np.ndarray) -> float:
    """
    {x : xᵀFx ≤ 1} 上 max_i |(V_η x)_i|

    Raises:
        ValueError: V_η 在 F 的零空间上有分量（特征无界）
    """
    f = f_set.shape.array
    v_eta = np.atleast_2d(np.asarray(v_eta, dtype=float))
    f_pinv = np.linalg.pinv(f, hermitian=True)
    null_part = v_eta @ (np.eye(f.shape[0]) - f_pinv @ f)
    if np.linalg.norm(null_part) > 1e-8 * max(1.0, np.linalg.norm(v_eta)):
        raise ValueError("E_sys 在 V_η 方向上无界，无法估计基函数 Lipschitz 常数")
    gram = v_eta @ f_pinv @ v_eta.T
    return float(np.sqrt(max(np.max(np.diag(gram)), 0.0)))


def resolve_lipschitz(sys: SystemModel, basis: BasisLibrary, cfg: LearnConfig,
                      model_class: str) -> LipschitzBundle:
    """
    汇总 (l_gx, l_gu, l_hx, l_hu)

    h 的常数：基函数库显式给定的值优先；否则 local 类在 E_sys 上按 V_η 投影半径解析估计，
    global 类需要 cfg.lipschitz_radius 或显式常数
    """
    l_gx, l_gu = (float(v) for v in sys.lipschitz_g)
    if basis.n_h == 0:
        return LipschitzBundle(l_gx, l_gu, 0.0, 0.0)
    radius = cfg.lipschitz_radius
    if radius is None and basis.lipschitz is None and model_class == 'local':
        radius = feature_radius(cfg.f_set, sys.v_eta)
    l_hx, l_hu = basis.lipschitz_constants(radius)
    logger.debug(f"Lipschitz 常数: l_gx={l_gx:.4g}, l_gu={l_gu:.4g}, l_hx={l_hx:.4g}, l_hu={l_hu:.4g}")
    return LipschitzBundle(l_gx, l_gu, float(l_hx), float(l_hu))


def collapse_overrides(lip: LipschitzBundle, n_h: int, cfg: LearnConfig,
                       norm_scalar: Optional[str]) -> Dict[str, List[float]]:
    """
    Θ_n 项不存在时 l̄_hx 与范数约束的乘子不影响问题，只保留一个网格值
    """
    if n_h and lip.has_h:
        return {}
    overrides = {'l_hx_bar': [cfg.first('l_hx_bar')]}
    if norm_scalar:
        overrides[norm_scalar] = [cfg.first(norm_scalar)]
    return overrides
