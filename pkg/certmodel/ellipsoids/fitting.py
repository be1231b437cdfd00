"""
包络椭球拟合
最小体积（Löwner-John）中心椭球：max log det X  s.t. pᵢᵀ X pᵢ ≤ 1，
求解失败时退回迹启发式，再退回缩放协方差；最后按全部点精确缩放保证包含
"""

import logging

import cvxpy as cp
import numpy as np

from certmodel.ellipsoids.ellipsoid import Ellipsoid
from certmodel.sdp.linalg import SymMatrix

logger = logging.getLogger(__name__)

FIT_METHODS = ('sdp', 'covariance')
DEFAULT_INFLATION = 1.05
# 超过该点数时只把马氏距离最大的点交给 SDP
MAX_SDP_POINTS = 2000
RANK_RTOL = 1e-10


def _solve_shape_sdp(coords: np.ndarray) -> np.ndarray:
    k = coords.shape[1]
    x = cp.Variable((k, k), PSD=True)
    fits = cp.sum(cp.multiply(coords @ x, coords), axis=1) <= 1
    for objective, label in ((cp.log_det(x), 'log-det'), (cp.trace(x), '迹启发式')):
        problem = cp.Problem(cp.Maximize(objective), [fits])
        for solver in ('CLARABEL', 'SCS'):
            if solver not in cp.installed_solvers():
                continue
            try:
                problem.solve(solver=solver)
            except cp.SolverError as e:
                logger.debug(f"椭球 SDP ({label}, {solver}) 失败: {e}")
                continue
            if problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) and x.value is not None:
                value = 0.5 * (x.value + x.value.T)
                if np.linalg.eigvalsh(value)[0] > 0:
                    logger.debug(f"椭球 SDP 求解成功 ({label}, {solver})")
                    return value
        logger.warning(f"⚠ 椭球 SDP ({label}) 未得到正定解")
    raise RuntimeError("椭球 SDP 求解失败")


def _covariance_shape(coords: np.ndarray) -> np.ndarray:
    cov = coords.T @ coords / coords.shape[0]
    return np.linalg.inv(cov)


def _candidate_points(coords: np.ndarray, max_points: int) -> np.ndarray:
    if coords.shape[0] <= max_points:
        return coords
    shape = _covariance_shape(coords)
    dist = np.einsum('ij,jk,ik->i', coords, shape, coords)
    keep = np.argsort(dist)[-max_points:]
    return coords[np.sort(keep)]


def fit_bounding(points, inflation: float = DEFAULT_INFLATION, method: str = 'sdp',
                 fallback_radius: float = 1.0, max_points: int = MAX_SDP_POINTS) -> Ellipsoid:
    """
    拟合包含所有点的中心椭球

    Args:
        points: (N, d) 点集
        inflation: 膨胀系数 ≥ 1，所有点满足 vᵀFv ≤ 1/inflation²
        method: 'sdp'（log-det）或 'covariance'
        fallback_radius: 点全为 0 时返回的球半径
        max_points: 交给 SDP 的最大点数

    Returns:
        Ellipsoid（点落在真子空间时 degenerate=True）
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] < 1:
        raise ValueError("至少需要一个点")
    if not np.all(np.isfinite(pts)):
        raise ValueError("点集包含 NaN 或 Inf")
    if inflation < 1.0:
        raise ValueError(f"膨胀系数必须 ≥ 1: {inflation}")
    if method not in FIT_METHODS:
        raise ValueError(f"未知拟合方法: {method}")

    n_points, dim = pts.shape
    _, sing, vt = np.linalg.svd(pts, full_matrices=False)
    if sing.size == 0 or sing[0] == 0.0:
        logger.info(f"⊘ 点集全为零，返回半径 {fallback_radius} 的球")
        return Ellipsoid.ball(dim, fallback_radius)

    rank = int(np.sum(sing > RANK_RTOL * sing[0]))
    basis = vt[:rank].T
    coords = pts @ basis

    shape_k = None
    if method == 'sdp':
        try:
            shape_k = _solve_shape_sdp(_candidate_points(coords, max_points))
        except RuntimeError:
            logger.warning("⚠ 椭球 SDP 失败，退回协方差方法")
    if shape_k is None:
        shape_k = _covariance_shape(coords)

    worst = float(np.max(np.einsum('ij,jk,ik->i', coords, shape_k, coords)))
    if worst > 0:
        shape_k = shape_k / worst
    shape_k = shape_k / inflation ** 2

    shape = basis @ shape_k @ basis.T
    degenerate = rank < dim
    if degenerate:
        logger.warning(f"⚠ 点集落在 {rank} 维子空间（ambient {dim} 维），椭球形状退化")
    logger.debug(f"椭球拟合完成: N={n_points}, dim={dim}, rank={rank}, method={method}")
    return Ellipsoid(SymMatrix(shape, check=False), degenerate=degenerate)
