"""
带标签数据集与数据矩阵
d_i = (V_η x̂_i; û_i; η̂_i; h(V_η x̂_i, û_i))，D = Σ w_i d_i d_iᵀ，J = tr(T D Tᵀ)
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np

from certmodel.errors import DimensionMismatchError, EmptyDatasetError
from certmodel.models.basis import BasisLibrary
from certmodel.models.extended import UncertaintyModel
from certmodel.sdp.linalg import SymMatrix, psd_factor

logger = logging.getLogger(__name__)


def _finite_2d(arr, name: str, cols: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None] if cols != 0 else arr.reshape(-1, 0)
    if cols is not None and arr.shape[1] != cols:
        raise DimensionMismatchError(f"{name} 列数 {arr.shape[1]} != {cols}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} 包含 NaN 或 Inf")
    return arr


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """
    (û, x̂, η̂) 样本集

    Attributes:
        inputs: (N, l)
        states: (N, n)
        labels: (N, n_η)
        basis: 基函数库
        v_eta: V_η（n_vη × n）
        times: 采样时刻（可选，仅用于导出）
        weights: 样本权重（缺省全为 1）
    """
    inputs: np.ndarray
    states: np.ndarray
    labels: np.ndarray
    basis: BasisLibrary
    v_eta: np.ndarray
    times: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        v_eta = np.atleast_2d(np.asarray(self.v_eta, dtype=float))
        states = _finite_2d(self.states, 'x̂', v_eta.shape[1])
        count = states.shape[0]
        inputs = _finite_2d(self.inputs, 'û')
        labels = _finite_2d(self.labels, 'η̂')
        if inputs.shape[0] != count or labels.shape[0] != count:
            raise DimensionMismatchError(
                f"样本数不一致: û {inputs.shape[0]}, x̂ {count}, η̂ {labels.shape[0]}"
            )
        if self.basis.in_dim != v_eta.shape[0]:
            raise DimensionMismatchError(f"基函数输入维度 {self.basis.in_dim} != n_vη = {v_eta.shape[0]}")
        object.__setattr__(self, 'v_eta', v_eta)
        object.__setattr__(self, 'states', states)
        object.__setattr__(self, 'inputs', inputs)
        object.__setattr__(self, 'labels', labels)
        if self.times is not None:
            times = np.asarray(self.times, dtype=float).reshape(-1)
            if times.size != count:
                raise DimensionMismatchError("times 长度与样本数不一致")
            object.__setattr__(self, 'times', times)
        if self.weights is not None:
            weights = np.asarray(self.weights, dtype=float).reshape(-1)
            if weights.size != count or np.any(weights < 0):
                raise ValueError("权重长度必须等于样本数且非负")
            object.__setattr__(self, 'weights', weights)

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def l(self) -> int:
        return self.inputs.shape[1]

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def n_eta(self) -> int:
        return self.labels.shape[1]

    def features(self) -> np.ndarray:
        """s = V_η x̂"""
        return self.states @ self.v_eta.T

    def with_basis(self, basis: BasisLibrary) -> 'LabeledDataset':
        return LabeledDataset(self.inputs, self.states, self.labels, basis, self.v_eta,
                              self.times, self.weights)

    @classmethod
    def pool(cls, datasets: Sequence['LabeledDataset']) -> 'LabeledDataset':
        """合并多个训练集（时间戳丢弃）"""
        if not datasets:
            raise EmptyDatasetError("没有可合并的数据集")
        first = datasets[0]
        weights = None
        if any(ds.weights is not None for ds in datasets):
            weights = np.concatenate([ds.weights if ds.weights is not None else np.ones(len(ds))
                                      for ds in datasets])
        return cls(
            np.vstack([ds.inputs for ds in datasets]),
            np.vstack([ds.states for ds in datasets]),
            np.vstack([ds.labels for ds in datasets]),
            first.basis, first.v_eta, None, weights,
        )


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """
    数据矩阵 D 及其因子 D̃（D = D̃ᵀD̃）

    Attributes:
        d: 数据矩阵
        factor: rank × dim
        n_samples: 样本数
        sizes: (n_vη, l, n_label, n_h) 各块维度
        label_map: 标签映射（None 表示恒等）
    """
    d: SymMatrix
    factor: np.ndarray
    n_samples: int
    sizes: tuple
    label_map: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.d.dim

    @property
    def n_label(self) -> int:
        return self.sizes[2]

    def t_matrix(self, theta_l, b_l, theta_n) -> np.ndarray:
        """T = [Θ_l  B_l  −I  Θ_n]"""
        n_veta, l, n_label, n_h = self.sizes
        theta_l = np.asarray(theta_l, dtype=float).reshape(n_label, n_veta)
        b_l = np.asarray(b_l, dtype=float).reshape(n_label, l)
        theta_n = np.asarray(theta_n, dtype=float).reshape(n_label, n_h)
        return np.hstack([theta_l, b_l, -np.eye(n_label), theta_n])


def build_data_matrix(ds: LabeledDataset, label_map: Optional[np.ndarray] = None,
                      weights: Optional[np.ndarray] = None) -> DataMatrix:
    """
    组装数据矩阵

    Args:
        ds: 数据集（N ≥ 1）
        label_map: 标签映射 S（数据向量中使用 S·η̂，S_ηl = I 时取 S_η）
        weights: 样本权重，缺省使用 ds.weights 或全 1

    Returns:
        DataMatrix

    Raises:
        EmptyDatasetError: 数据集为空
    """
    if len(ds) == 0:
        raise EmptyDatasetError("数据集为空，无法组装数据矩阵")
    s = ds.features()
    labels = ds.labels
    if label_map is not None:
        label_map = np.atleast_2d(np.asarray(label_map, dtype=float))
        if label_map.shape[1] != ds.n_eta:
            raise DimensionMismatchError(f"标签映射列数 {label_map.shape[1]} != n_η = {ds.n_eta}")
        labels = labels @ label_map.T
    h = ds.basis(s, ds.inputs)
    rows = np.hstack([s, ds.inputs, labels, h])

    if weights is None:
        weights = ds.weights
    if weights is None:
        d = rows.T @ rows
    else:
        weights = np.asarray(weights, dtype=float).reshape(-1)
        d = (rows * weights[:, None]).T @ rows
    d = 0.5 * (d + d.T)
    sizes = (s.shape[1], ds.l, labels.shape[1], h.shape[1])
    factor = psd_factor(d)
    logger.debug(f"数据矩阵: N={len(ds)}, dim={d.shape[0]}, rank={factor.shape[0]}")
    return DataMatrix(SymMatrix(d, check=False), factor, len(ds), sizes, label_map)


def cost(theta: UncertaintyModel, dm: DataMatrix) -> float:
    """
    二次代价 J = tr(T D Tᵀ)

    Args:
        theta: 不确定性模型（η_l 维度须与数据矩阵标签维度一致）
        dm: 数据矩阵

    Returns:
        J ≥ 0
    """
    if theta.n_etal != dm.n_label:
        raise DimensionMismatchError(f"η_l 维度 {theta.n_etal} 与标签维度 {dm.n_label} 不一致")
    t = dm.t_matrix(theta.theta_l, theta.b_l, theta.theta_n)
    return float(max(np.trace(t @ dm.d.array @ t.T), 0.0))


def lift_uncertainty(model: UncertaintyModel, s_eta: np.ndarray) -> UncertaintyModel:
    """
    把 S_ηl = S_η 的模型改写为 S_ηl = I 的等价形式（Θ ← S_η Θ）
    扩展模型的右端项不变
    """
    s_eta = np.atleast_2d(np.asarray(s_eta, dtype=float))
    if not np.allclose(model.s_eta_l, s_eta):
        raise ValueError("模型的 S_ηl 与给定 S_η 不一致")
    n = s_eta.shape[0]
    return UncertaintyModel(s_eta @ model.theta_l, s_eta @ model.b_l, s_eta @ model.theta_n,
                            np.eye(n), model.basis)
