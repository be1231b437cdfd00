"""
对称矩阵线性代数
- SymMatrix：构造时强制对称、拒绝非有限值
- min_eig / max_eig：最小 / 最大特征值
- psd_factor：半正定矩阵的矩形因子 D = D̃ᵀD̃
- schur_reduce：Schur 补 A − B C⁻¹ Bᵀ
"""

import logging
from typing import Optional, Union

import numpy as np
import scipy.linalg

from certmodel.errors import DimensionMismatchError, NotPsdError, SingularBlockError

logger = logging.getLogger(__name__)

# 构造时允许的非对称误差（相对）
SYMMETRY_RTOL = 1e-8


class SymMatrix:
    """
    实对称矩阵

    存储为 0.5·(M + Mᵀ)，因此 max |M_ij − M_ji| = 0。
    """

    __slots__ = ('_data',)

    def __init__(self, data, check: bool = True):
        arr = np.array(data, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionMismatchError(f"对称矩阵必须是方阵，实际形状 {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("对称矩阵包含 NaN 或 Inf")
        if check and arr.size:
            asym = np.max(np.abs(arr - arr.T))
            scale = max(1.0, np.max(np.abs(arr)))
            if asym > SYMMETRY_RTOL * scale:
                raise ValueError(f"矩阵不对称: max|M - Mᵀ| = {asym:.3e}")
        sym = 0.5 * (arr + arr.T)
        sym.setflags(write=False)
        self._data = sym

    @classmethod
    def identity(cls, dim: int) -> 'SymMatrix':
        return cls(np.eye(dim), check=False)

    @classmethod
    def zeros(cls, dim: int) -> 'SymMatrix':
        return cls(np.zeros((dim, dim)), check=False)

    @property
    def dim(self) -> int:
        return self._data.shape[0]

    @property
    def array(self) -> np.ndarray:
        """只读 numpy 视图"""
        return self._data

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data.copy()
        return self._data.astype(dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash(self._data.tobytes())

    def __repr__(self) -> str:
        return f"SymMatrix(dim={self.dim})"

    def scaled(self, factor: float) -> 'SymMatrix':
        return SymMatrix(self._data * factor, check=False)


MatrixLike = Union[SymMatrix, np.ndarray]


def as_array(m: MatrixLike) -> np.ndarray:
    """SymMatrix 或数组 -> 对称化后的 numpy 数组"""
    if isinstance(m, SymMatrix):
        return m.array
    arr = np.asarray(m, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"需要方阵，实际形状 {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("矩阵包含 NaN 或 Inf")
    return 0.5 * (arr + arr.T)


def min_eig(m: MatrixLike) -> float:
    """
    最小特征值

    Args:
        m: 对称矩阵

    Returns:
        λ_min；空矩阵返回 +inf
    """
    arr = as_array(m)
    if arr.size == 0:
        return float('inf')
    return float(np.linalg.eigvalsh(arr)[0])


def max_eig(m: MatrixLike) -> float:
    """最大特征值；空矩阵返回 -inf"""
    arr = as_array(m)
    if arr.size == 0:
        return float('-inf')
    return float(np.linalg.eigvalsh(arr)[-1])


def default_jitter(d: MatrixLike) -> float:
    """数据矩阵默认抖动 1e-10·tr(D)/dim"""
    arr = as_array(d)
    if arr.size == 0:
        return 0.0
    return 1e-10 * max(float(np.trace(arr)), 0.0) / arr.shape[0]


def psd_factor(d: MatrixLike, jitter: Optional[float] = None) -> np.ndarray:
    """
    半正定矩阵的矩形因子 D̃，使 D = D̃ᵀD̃

    满秩时使用 Cholesky（D̃ = Lᵀ），否则退回特征分解并只保留数值秩内的特征方向。
    每行最大绝对值元素取正号，保证结果确定。

    Args:
        d: 半正定对称矩阵
        jitter: 允许的负特征值幅度（默认 1e-10·tr(D)/dim）

    Returns:
        rank × dim 的矩阵

    Raises:
        NotPsdError: λ_min < −jitter
    """
    arr = as_array(d)
    dim = arr.shape[0]
    if jitter is None:
        jitter = default_jitter(arr)
    if dim == 0:
        return np.zeros((0, 0))

    eigvals, eigvecs = np.linalg.eigh(arr)
    if eigvals[0] < -jitter:
        raise NotPsdError(f"矩阵不是半正定的: λ_min = {eigvals[0]:.3e} < -{jitter:.3e}")

    threshold = max(jitter, dim * np.finfo(float).eps * max(abs(eigvals[-1]), 0.0))
    if eigvals[0] > threshold:
        try:
            lower = np.linalg.cholesky(arr)
            return lower.T
        except np.linalg.LinAlgError:
            logger.debug("Cholesky 分解失败，退回特征分解")

    keep = eigvals > threshold
    if not np.any(keep):
        return np.zeros((0, dim))
    factor = np.sqrt(eigvals[keep])[:, None] * eigvecs[:, keep].T
    # 特征分解按升序排列，翻转为主方向在前
    factor = factor[::-1]
    for row in factor:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return factor


def schur_reduce(a: MatrixLike, b: np.ndarray, c: MatrixLike) -> SymMatrix:
    """
    Schur 补 A − B C⁻¹ Bᵀ

    Args:
        a: 左上块（k×k）
        b: 右上块（k×p）
        c: 右下块（p×p），必须正定

    Returns:
        Schur 补

    Raises:
        SingularBlockError: C 不正定
    """
    a_arr = as_array(a)
    c_arr = as_array(c)
    b_arr = np.atleast_2d(np.asarray(b, dtype=float))
    if b_arr.shape != (a_arr.shape[0], c_arr.shape[0]):
        raise DimensionMismatchError(
            f"Schur 块维度不一致: A {a_arr.shape}, B {b_arr.shape}, C {c_arr.shape}"
        )
    try:
        chol = scipy.linalg.cho_factor(c_arr, lower=True)
    except np.linalg.LinAlgError as e:
        raise SingularBlockError(f"C 块不正定: {e}") from e
    return SymMatrix(a_arr - b_arr @ scipy.linalg.cho_solve(chol, b_arr.T), check=False)


def is_hurwitz(a: np.ndarray, margin: float = 0.0) -> bool:
    """所有特征值实部 < −margin"""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return True
    return bool(np.max(np.linalg.eigvals(a).real) < -margin)


def solve_lyapunov(a: np.ndarray, q: Optional[np.ndarray] = None) -> SymMatrix:
    """
    求解 AᵀP + PA = −Q（默认 Q = I）

    Args:
        a: Hurwitz 矩阵
        q: 右端正定矩阵

    Returns:
        P
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if q is None:
        q = np.eye(a.shape[0])
    p = scipy.linalg.solve_continuous_lyapunov(a.T, -q)
    return SymMatrix(p, check=False)
