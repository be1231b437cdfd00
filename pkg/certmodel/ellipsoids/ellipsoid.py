"""
椭球集合 {v : vᵀ·shape·v ≤ 1}
shape 允许半正定（零特征方向上不受约束）
"""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np
import scipy.linalg

from certmodel.errors import DimensionMismatchError, NotPsdError
from certmodel.sdp.linalg import SymMatrix, min_eig

CONTAINS_TOL = 1e-9
RANK_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """
    中心在原点的椭球

    Attributes:
        shape: 形状矩阵（F、U 或 P）
        degenerate: shape 是否有零特征值
    """
    shape: SymMatrix
    degenerate: bool = False

    def __post_init__(self):
        if not isinstance(self.shape, SymMatrix):
            object.__setattr__(self, 'shape', SymMatrix(self.shape))
        arr = self.shape.array
        if arr.size and min_eig(arr) < -1e-10 * max(1.0, np.max(np.abs(arr))):
            raise NotPsdError("椭球形状矩阵必须半正定")
        if arr.size and not self.degenerate and self.rank < self.dim:
            object.__setattr__(self, 'degenerate', True)

    @classmethod
    def ball(cls, dim: int, radius: float = 1.0) -> 'Ellipsoid':
        return cls(SymMatrix(np.eye(dim) / radius ** 2, check=False))

    @property
    def dim(self) -> int:
        return self.shape.dim

    @property
    def rank(self) -> int:
        eig = np.linalg.eigvalsh(self.shape.array)
        if eig.size == 0:
            return 0
        return int(np.sum(eig > RANK_RTOL * max(eig[-1], 0.0)))

    def _axes(self):
        """(特征值, 特征向量)，只保留非零方向"""
        eig, vec = np.linalg.eigh(self.shape.array)
        keep = eig > RANK_RTOL * max(eig[-1], 0.0) if eig.size else np.zeros(0, bool)
        return eig[keep], vec[:, keep]

    def max_radius(self) -> float:
        """受约束方向上最长半轴"""
        eig, _ = self._axes()
        if eig.size == 0:
            return 0.0
        return float(1.0 / np.sqrt(eig[0]))

    def quadratic(self, v: np.ndarray) -> np.ndarray:
        """vᵀ·shape·v，支持 (..., dim) 批量"""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise DimensionMismatchError(f"向量维度 {v.shape[-1]} != 椭球维度 {self.dim}")
        return np.einsum('...i,ij,...j->...', v, self.shape.array, v)

    def contains(self, v: np.ndarray) -> bool:
        return bool(np.all(self.quadratic(v) <= 1.0 + CONTAINS_TOL))

    def sample_interior(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """
        在椭球内均匀采样（零特征方向上取 0）

        Returns:
            (count, dim)
        """
        eig, vec = self._axes()
        k = eig.size
        if k == 0:
            return np.zeros((count, self.dim))
        d = rng.standard_normal((count, k))
        d /= np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
        radius = rng.uniform(size=(count, 1)) ** (1.0 / k)
        return (radius * d / np.sqrt(eig)) @ vec.T

    def sample_boundary(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """在椭球边界 vᵀ·shape·v = 1 上采样"""
        eig, vec = self._axes()
        k = eig.size
        if k == 0:
            return np.zeros((count, self.dim))
        d = rng.standard_normal((count, k))
        d /= np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
        return (d / np.sqrt(eig)) @ vec.T

    def clip(self, v: np.ndarray) -> np.ndarray:
        """把集合外的点沿径向缩回边界"""
        v = np.array(v, dtype=float)
        q = self.quadratic(v)
        outside = q > 1.0
        if np.any(outside):
            v[outside] = v[outside] / np.sqrt(q[outside])[:, None]
        return v

    def scaled(self, factor: float) -> 'Ellipsoid':
        """半轴放大 factor 倍（shape / factor²）"""
        return Ellipsoid(self.shape.scaled(1.0 / factor ** 2), self.degenerate)

    def volume_measure(self) -> float:
        """−½·log det(shape)，越大体积越大（退化时为 +inf）"""
        eig = np.linalg.eigvalsh(self.shape.array)
        if eig.size == 0 or eig[0] <= 0:
            return float('inf')
        return float(-0.5 * np.sum(np.log(eig)))

    def to_dict(self) -> Dict[str, Any]:
        return {'shape': self.shape.array.tolist(), 'degenerate': self.degenerate}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Ellipsoid':
        return cls(SymMatrix(np.asarray(data['shape'], dtype=float)), bool(data.get('degenerate', False)))


def contains(e: Ellipsoid, v: np.ndarray) -> bool:
    """vᵀ·shape·v ≤ 1 + 1e-9"""
    return e.contains(v)


def check_subset(inner: Ellipsoid, outer: Ellipsoid) -> Dict[str, Any]:
    """
    判断 {xᵀPx ≤ 1} ⊂ {xᵀFx ≤ 1}

    求最大的 γ 使 γF ⪯ P（广义特征值 γ* = 1/λ_max(F, P)），
    包含关系成立当且仅当 γ* ≥ 1。

    Args:
        inner: 内椭球（P ≻ 0）
        outer: 外椭球（F ⪰ 0）

    Returns:
        {'holds': bool, 'gamma': 证书 γ（不成立时为 γ*）}
    """
    p = inner.shape.array
    f = outer.shape.array
    if p.shape != f.shape:
        raise DimensionMismatchError(f"椭球维度不一致: {p.shape} vs {f.shape}")
    if min_eig(p) <= 0:
        raise NotPsdError("内椭球 P 必须正定")

    lam = scipy.linalg.eigh(f, p, eigvals_only=True)
    lam_max = float(lam[-1])
    if lam_max <= 0:
        return {'holds': True, 'gamma': 1.0, 'gamma_max': float('inf')}
    gamma_max = 1.0 / lam_max
    holds = gamma_max >= 1.0 - 1e-12
    return {'holds': bool(holds), 'gamma': gamma_max, 'gamma_max': gamma_max}


def regularize(e: Ellipsoid, radius: float) -> Ellipsoid:
    """
    用 1/radius² 填补退化方向，使每个方向都有界

    Args:
        e: 可能退化的椭球
        radius: 零特征方向上的半轴长度
    """
    if radius <= 0:
        raise ValueError(f"半径必须为正: {radius}")
    eig, vec = np.linalg.eigh(e.shape.array)
    if eig.size == 0:
        return e
    null = eig <= RANK_RTOL * max(eig[-1], 0.0)
    if not np.any(null):
        return e
    eig = np.where(null, 1.0 / radius ** 2, eig)
    return Ellipsoid(SymMatrix((vec * eig) @ vec.T, check=False))
