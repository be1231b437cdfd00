"""
输出误差指标 Σ_t ‖y_sys(t) − y_model(t)‖
"""

from typing import Union

import numpy as np

from certmodel.errors import GridMismatchError
from certmodel.simulation.integrator import Trajectory

OutputsLike = Union[Trajectory, np.ndarray]


def _unpack(value: OutputsLike):
    if isinstance(value, Trajectory):
        return value.times, value.outputs
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return None, arr


def output_error(y_sys: OutputsLike, y_model: OutputsLike) -> float:
    """
    网格上输出差的欧氏范数之和

    Args:
        y_sys: 系统输出（Trajectory 或 (T, m) 数组）
        y_model: 模型输出

    Returns:
        误差和；任一侧含 NaN（发散轨迹）时返回 inf

    Raises:
        GridMismatchError: 时间网格或形状不一致
    """
    t_a, a = _unpack(y_sys)
    t_b, b = _unpack(y_model)
    if t_a is not None and t_b is not None and not np.array_equal(t_a, t_b):
        raise GridMismatchError("两条轨迹的时间网格不一致")
    if a.shape != b.shape:
        raise GridMismatchError(f"输出形状不一致: {a.shape} vs {b.shape}")
    diff = np.linalg.norm(a - b, axis=1)
    if not np.all(np.isfinite(diff)):
        return float('inf')
    return float(np.sum(diff))
