"""
不确定性模型与扩展模型
η_l = Θ_l V_η x + B_l u + Θ_n h(V_η x, u)
ẋ = A x + B_u u + S_g g(V_g x, u) + S_ηl η_l
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from certmodel.errors import DimensionMismatchError
from certmodel.models.basis import BasisLibrary
from certmodel.models.system import SystemModel, known_part, _check_last
from certmodel.sdp.linalg import SymMatrix

CERTIFICATE_KINDS = ('invariant-set', 'iss')


def _frozen(arr, rows: int, cols: int, name: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if arr.size == 0:
        arr = np.zeros((rows, cols))
    arr = np.atleast_2d(arr)
    if arr.shape != (rows, cols):
        raise DimensionMismatchError(f"{name} 形状 {arr.shape} != ({rows}, {cols})")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} 包含 NaN 或 Inf")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class UncertaintyModel:
    """
    学习得到的不确定性模型 θ = (Θ_l, B_l, Θ_n) 以及输出矩阵 S_ηl
    """
    theta_l: np.ndarray
    b_l: np.ndarray
    theta_n: np.ndarray
    s_eta_l: np.ndarray
    basis: BasisLibrary

    def __post_init__(self):
        s_eta_l = np.atleast_2d(np.asarray(self.s_eta_l, dtype=float))
        n, n_etal = s_eta_l.shape
        theta_l = np.asarray(self.theta_l, dtype=float)
        b_l = np.asarray(self.b_l, dtype=float)
        n_veta = self.basis.in_dim
        l = b_l.shape[1] if b_l.ndim == 2 else 0
        object.__setattr__(self, 's_eta_l', _frozen(s_eta_l, n, n_etal, 'S_ηl'))
        object.__setattr__(self, 'theta_l', _frozen(theta_l, n_etal, n_veta, 'Θ_l'))
        object.__setattr__(self, 'b_l', _frozen(b_l, n_etal, l, 'B_l'))
        object.__setattr__(self, 'theta_n', _frozen(self.theta_n, n_etal, self.basis.n_h, 'Θ_n'))

    @classmethod
    def zero(cls, s_eta_l: np.ndarray, l: int, basis: BasisLibrary) -> 'UncertaintyModel':
        """θ = 0"""
        s_eta_l = np.atleast_2d(np.asarray(s_eta_l, dtype=float))
        k = s_eta_l.shape[1]
        return cls(np.zeros((k, basis.in_dim)), np.zeros((k, l)),
                   np.zeros((k, basis.n_h)), s_eta_l, basis)

    @property
    def n_etal(self) -> int:
        return self.s_eta_l.shape[1]

    @property
    def l(self) -> int:
        return self.b_l.shape[1]

    @property
    def lifted(self) -> bool:
        """S_ηl = I：η_l 直接对应提升标签 S_η η̂"""
        rows, cols = self.s_eta_l.shape
        return rows == cols and bool(np.allclose(self.s_eta_l, np.eye(rows)))

    def eta(self, s: np.ndarray, u: np.ndarray) -> np.ndarray:
        """η_l(s, u)，s = V_η x"""
        s = np.asarray(s, dtype=float)
        u = np.asarray(u, dtype=float)
        out = s @ self.theta_l.T + u @ self.b_l.T
        if self.basis.n_h:
            out = out + self.basis(s, u) @ self.theta_n.T
        return out

    def replace(self, **kwargs) -> 'UncertaintyModel':
        data = dict(theta_l=self.theta_l, b_l=self.b_l, theta_n=self.theta_n,
                    s_eta_l=self.s_eta_l, basis=self.basis)
        data.update(kwargs)
        return UncertaintyModel(**data)


@dataclass(frozen=True, eq=False)
class StabilityCertificate:
    """
    稳定性证书：P 以及合成时使用的标量（α, β, γ, l̄_hx, 严格裕量等）
    """
    p: SymMatrix
    kind: str
    scalars: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CERTIFICATE_KINDS:
            raise ValueError(f"未知证书类型: {self.kind}")
        if not isinstance(self.p, SymMatrix):
            object.__setattr__(self, 'p', SymMatrix(self.p))

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'scalars': dict(self.scalars)}


@dataclass(frozen=True, eq=False)
class ExtendedModel:
    """已知部分 + 不确定性模型（可选附带证书）"""
    system: SystemModel
    uncertainty: UncertaintyModel
    certificate: Optional[StabilityCertificate] = None

    def __post_init__(self):
        unc = self.uncertainty
        if unc.s_eta_l.shape[0] != self.system.n:
            raise DimensionMismatchError(f"S_ηl 行数 {unc.s_eta_l.shape[0]} != n = {self.system.n}")
        if unc.basis.in_dim != self.system.n_veta:
            raise DimensionMismatchError(
                f"基函数输入维度 {unc.basis.in_dim} != n_vη = {self.system.n_veta}"
            )
        if unc.l != self.system.l:
            raise DimensionMismatchError(f"B_l 列数 {unc.l} != l = {self.system.l}")
        if self.certificate is not None and self.certificate.p.dim != self.system.n:
            raise DimensionMismatchError("证书 P 维度与系统状态维度不一致")

    @classmethod
    def prior_only(cls, system: SystemModel, basis: Optional[BasisLibrary] = None) -> 'ExtendedModel':
        """θ = 0 的先验模型"""
        basis = basis or BasisLibrary.empty(system.n_veta)
        return cls(system, UncertaintyModel.zero(system.s_eta, system.l, basis))


def eval_extended_rhs(model: ExtendedModel, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """
    扩展模型右端 A x + B_u u + S_g g(V_g x, u) + S_ηl (Θ_l V_η x + B_l u + Θ_n h(V_η x, u))

    Args:
        model: 扩展模型
        x: (..., n)
        u: (..., l)

    Returns:
        ẋ (..., n)
    """
    sys = model.system
    rhs = known_part(sys, x, u)
    x = _check_last(x, sys.n, 'x')
    u = np.asarray(u, dtype=float) if sys.l else np.zeros(x.shape[:-1] + (0,))
    unc = model.uncertainty
    if unc.n_etal:
        rhs = rhs + unc.eta(x @ sys.v_eta.T, u) @ unc.s_eta_l.T
    return rhs
