"""
由滤波器输出构造带标签数据集，以及估计精度指标
"""

import logging
from typing import Optional

import numpy as np

from certmodel.errors import EmptyDatasetError
from certmodel.estimator.filter import FilterRun
from certmodel.learning.dataset import LabeledDataset
from certmodel.models.basis import BasisLibrary

logger = logging.getLogger(__name__)


def make_labeled_dataset(run: FilterRun, u: np.ndarray, basis: BasisLibrary, v_eta: np.ndarray,
                         transient_cut: float = 0.0, decimation: int = 1) -> LabeledDataset:
    """
    截去过渡段并抽取

    Args:
        run: 滤波器输出（η̂、x̂）
        u: (T, l) 输入
        basis: 基函数库
        v_eta: V_η
        transient_cut: 丢弃 t < transient_cut 的样本
        decimation: 抽取步长

    Returns:
        LabeledDataset（N = ⌈保留长度 / decimation⌉）

    Raises:
        EmptyDatasetError: 截断后没有样本
    """
    if decimation < 1:
        raise ValueError(f"抽取步长必须 ≥ 1: {decimation}")
    times = run.times
    u = np.asarray(u, dtype=float).reshape(times.size, -1)
    keep = np.flatnonzero(times >= transient_cut)[::decimation]
    if keep.size == 0:
        raise EmptyDatasetError(f"截断 t < {transient_cut} 后数据集为空 (t_f = {times[-1]:.4g})")
    logger.debug(f"标签数据集: {keep.size} 个样本 (截断 {transient_cut} s, 抽取 {decimation})")
    return LabeledDataset(u[keep], run.x_hat[keep], run.eta_hat[keep], basis, v_eta, times[keep])


def estimation_error(eta_true: np.ndarray, eta_hat: np.ndarray, times: np.ndarray,
                     transient: float = 0.0) -> float:
    """
    过渡段之后的归一化估计误差 rms_t ‖η − η̂‖ / max_t ‖η‖

    真实不确定性恒为 0 时返回未归一化的 rms 误差
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    eta_true = np.asarray(eta_true, dtype=float).reshape(times.size, -1)
    eta_hat = np.asarray(eta_hat, dtype=float).reshape(times.size, -1)
    mask = times >= transient
    if not np.any(mask):
        raise EmptyDatasetError(f"过渡段 {transient} s 覆盖了全部样本")
    err = np.linalg.norm(eta_true[mask] - eta_hat[mask], axis=1)
    rms = float(np.sqrt(np.mean(err ** 2)))
    scale = float(np.max(np.linalg.norm(eta_true[mask], axis=1)))
    return rms / scale if scale > 0 else rms
