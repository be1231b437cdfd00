"""
采样估计 Lipschitz 常数
对差商 ‖f(Vx₁,u) − f(Vx₂,u)‖/‖V(x₁−x₂)‖ 与 ‖f(Vx,u₁) − f(Vx,u₂)‖/‖u₁−u₂‖ 取最大值，
再乘安全系数；在多个细化层级上检查差商是否发散
"""

import logging
from typing import Callable, Optional, Tuple

import numpy as np

from certmodel.errors import UnboundedLipschitzError

logger = logging.getLogger(__name__)

DEFAULT_SAFETY = 1.2
MIN_SAMPLES = 1000
# 层级间差商增长超过该倍数即视为发散
DIVERGENCE_GROWTH = 2.0
REFINEMENT_LEVELS = 3


def _pair_quotients(f, base_s, other_s, base_u, other_u, denom) -> np.ndarray:
    diff = f(base_s, base_u) - f(other_s, other_u)
    num = np.linalg.norm(np.atleast_2d(diff).reshape(len(denom), -1), axis=1)
    mask = denom > 1e-14
    if not np.any(mask):
        return np.zeros(1)
    return num[mask] / denom[mask]


def estimate_lipschitz(f: Callable[[np.ndarray, np.ndarray], np.ndarray], x_set, u_set,
                       samples: int = MIN_SAMPLES, safety: float = DEFAULT_SAFETY,
                       v: Optional[np.ndarray] = None,
                       rng: Optional[np.random.Generator] = None) -> Tuple[float, float]:
    """
    估计 (l_x, l_u)

    Args:
        f: 非线性 (s, u) -> 向量，支持批量
        x_set: 状态集合（Ellipsoid）
        u_set: 输入集合（Ellipsoid）
        samples: 每个层级的采样对数（≥ 1000）
        safety: 安全系数
        v: 选择矩阵 V（缺省为单位阵）
        rng: 随机数发生器

    Returns:
        (l_x, l_u)

    Raises:
        UnboundedLipschitzError: 差商随细化层级持续增长
    """
    if samples < MIN_SAMPLES:
        raise ValueError(f"采样数至少 {MIN_SAMPLES}: {samples}")
    if safety < 1.0:
        raise ValueError(f"安全系数必须 ≥ 1: {safety}")
    rng = rng if rng is not None else np.random.default_rng(0)
    v = np.eye(x_set.dim) if v is None else np.atleast_2d(np.asarray(v, dtype=float))

    x_scale = x_set.max_radius()
    u_scale = u_set.max_radius()

    def refine(level: int) -> Tuple[float, float]:
        delta = 10.0 ** (-level)
        x1 = x_set.sample_interior(samples, rng)
        u1 = u_set.sample_interior(samples, rng)
        if level == 0:
            # 独立的随机点对覆盖大尺度割线
            x2 = x_set.sample_interior(samples, rng)
            u2 = u_set.sample_interior(samples, rng)
        else:
            x2 = x_set.clip(x1 + delta * x_scale * _unit_directions(rng, samples, x_set.dim))
            u2 = u_set.clip(u1 + delta * u_scale * _unit_directions(rng, samples, u_set.dim))

        s1, s2 = x1 @ v.T, x2 @ v.T
        qx = _pair_quotients(f, s1, s2, u1, u1, np.linalg.norm(s1 - s2, axis=1))
        qu = _pair_quotients(f, s1, s1, u1, u2, np.linalg.norm(u1 - u2, axis=1))
        return float(np.max(qx)), float(np.max(qu))

    levels = [refine(k) for k in range(REFINEMENT_LEVELS)]
    for idx in (0, 1):
        seq = [lv[idx] for lv in levels]
        if seq[0] > 0 and all(seq[k + 1] > DIVERGENCE_GROWTH * seq[k] for k in range(len(seq) - 1)):
            raise UnboundedLipschitzError(
                f"差商随细化发散: {', '.join(f'{q:.3e}' for q in seq)}"
            )

    l_x = safety * max(lv[0] for lv in levels)
    l_u = safety * max(lv[1] for lv in levels)
    logger.debug(f"Lipschitz 估计: l_x = {l_x:.4g}, l_u = {l_u:.4g}")
    return l_x, l_u


def _unit_directions(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    d = rng.standard_normal((count, dim))
    norms = np.linalg.norm(d, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return d / norms


def validate_lipschitz(f, l_x: float, l_u: float, x_set, u_set, pairs: int = 10000,
                       v: Optional[np.ndarray] = None,
                       rng: Optional[np.random.Generator] = None) -> float:
    """
    检查 ‖f(Vx₁,u₁) − f(Vx₂,u₂)‖ ≤ l_x‖V(x₁−x₂)‖ + l_u‖u₁−u₂‖

    Returns:
        最大超出量（≤ 0 表示全部满足）
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    v = np.eye(x_set.dim) if v is None else np.atleast_2d(np.asarray(v, dtype=float))
    x1, x2 = x_set.sample_interior(pairs, rng), x_set.sample_interior(pairs, rng)
    u1, u2 = u_set.sample_interior(pairs, rng), u_set.sample_interior(pairs, rng)
    s1, s2 = x1 @ v.T, x2 @ v.T
    lhs = np.linalg.norm(np.atleast_2d(f(s1, u1) - f(s2, u2)).reshape(pairs, -1), axis=1)
    rhs = l_x * np.linalg.norm(s1 - s2, axis=1) + l_u * np.linalg.norm(u1 - u2, axis=1)
    return float(np.max(lhs - rhs))
