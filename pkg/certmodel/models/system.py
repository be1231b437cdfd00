"""
已知系统模型
ẋ = A x + B_u u + S_g g(V_g x, u) + S_η η(V_η x, u) + B_ω ω,  y = C x + D_ν ν
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from certmodel.errors import DimensionMismatchError
from certmodel.models.nonlinear import Nonlinearity, ZeroMap

logger = logging.getLogger(__name__)

UncertaintyFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _matrix(value, rows: int, cols: int, name: str) -> np.ndarray:
    """转换为 rows×cols 的只读矩阵，None 表示零矩阵（允许 0 维）"""
    if value is None:
        arr = np.zeros((rows, cols))
    else:
        arr = np.asarray(value, dtype=float)
        if arr.size == 0:
            arr = np.zeros((rows, cols))
        else:
            arr = np.atleast_2d(arr)
    if arr.shape != (rows, cols):
        raise DimensionMismatchError(f"{name} 形状 {arr.shape} != ({rows}, {cols})")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} 包含 NaN 或 Inf")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SystemModel:
    """
    已知先验动力学（含合成数据用的真实不确定性）

    推荐通过 SystemModel.create 构造，缺省矩阵按 0 维补齐。
    """
    a: np.ndarray
    b_u: np.ndarray
    s_g: np.ndarray
    v_g: np.ndarray
    s_eta: np.ndarray
    b_omega: np.ndarray
    c: np.ndarray
    d_nu: np.ndarray
    v_eta: np.ndarray
    g: Nonlinearity
    eta_true: Optional[Nonlinearity] = None
    lipschitz_g: Tuple[float, float] = (0.0, 0.0)
    name: str = 'system'

    @classmethod
    def create(cls, a, b_u, c, s_g=None, v_g=None, g: Optional[Nonlinearity] = None,
               s_eta=None, v_eta=None, eta_true: Optional[Nonlinearity] = None,
               b_omega=None, d_nu=None, lipschitz_g: Optional[Tuple[float, float]] = None,
               name: str = 'system') -> 'SystemModel':
        """
        构造系统模型

        Args:
            a: n×n
            b_u: n×l
            c: m×n
            s_g, v_g: g 的输出 / 输入矩阵（缺省为 0 维）
            g: 已知非线性（缺省为零映射）
            s_eta, v_eta: 不确定性通道
            eta_true: 真实不确定性（仅用于合成数据）
            b_omega: 扰动矩阵
            d_nu: 测量噪声矩阵（缺省 I_m）
            lipschitz_g: (l_gx, l_gu)，缺省取 g 的解析常数
        """
        a = np.atleast_2d(np.asarray(a, dtype=float))
        n = a.shape[0]
        b_u = np.asarray(b_u, dtype=float).reshape(n, -1)
        l = b_u.shape[1]
        c = np.atleast_2d(np.asarray(c, dtype=float))
        m = c.shape[0]

        s_g = np.zeros((n, 0)) if s_g is None else np.asarray(s_g, dtype=float).reshape(n, -1)
        v_g = np.zeros((0, n)) if v_g is None else np.asarray(v_g, dtype=float).reshape(-1, n)
        s_eta = np.zeros((n, 0)) if s_eta is None else np.asarray(s_eta, dtype=float).reshape(n, -1)
        v_eta = np.zeros((0, n)) if v_eta is None else np.asarray(v_eta, dtype=float).reshape(-1, n)
        b_omega = np.zeros((n, 0)) if b_omega is None else np.asarray(b_omega, dtype=float).reshape(n, -1)
        d_nu = np.eye(m) if d_nu is None else np.asarray(d_nu, dtype=float).reshape(m, -1)

        if g is None:
            g = ZeroMap(v_g.shape[0], s_g.shape[1])
        if lipschitz_g is None:
            lipschitz_g = g.lipschitz()
            if lipschitz_g is None:
                raise ValueError("g 没有解析 Lipschitz 常数，请显式给定 lipschitz_g")
        return cls(a=a, b_u=b_u, s_g=s_g, v_g=v_g, s_eta=s_eta, b_omega=b_omega,
                   c=c, d_nu=d_nu, v_eta=v_eta, g=g, eta_true=eta_true,
                   lipschitz_g=tuple(float(v) for v in lipschitz_g), name=name)

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionMismatchError(f"A 必须是方阵: {a.shape}")
        b_u = np.asarray(self.b_u, dtype=float)
        c = np.asarray(self.c, dtype=float)
        s_g = np.asarray(self.s_g, dtype=float)
        v_g = np.asarray(self.v_g, dtype=float)
        s_eta = np.asarray(self.s_eta, dtype=float)
        v_eta = np.asarray(self.v_eta, dtype=float)
        b_omega = np.asarray(self.b_omega, dtype=float)
        d_nu = np.asarray(self.d_nu, dtype=float)

        l = b_u.shape[1] if b_u.ndim == 2 else 0
        m = c.shape[0] if c.ndim == 2 else 0
        object.__setattr__(self, 'a', _matrix(a, n, n, 'A'))
        object.__setattr__(self, 'b_u', _matrix(b_u, n, l, 'B_u'))
        object.__setattr__(self, 'c', _matrix(c, m, n, 'C'))
        object.__setattr__(self, 's_g', _matrix(s_g, n, s_g.shape[1] if s_g.ndim == 2 else 0, 'S_g'))
        object.__setattr__(self, 'v_g', _matrix(v_g, v_g.shape[0] if v_g.ndim == 2 else 0, n, 'V_g'))
        object.__setattr__(self, 's_eta', _matrix(s_eta, n, s_eta.shape[1] if s_eta.ndim == 2 else 0, 'S_η'))
        object.__setattr__(self, 'v_eta', _matrix(v_eta, v_eta.shape[0] if v_eta.ndim == 2 else 0, n, 'V_η'))
        object.__setattr__(self, 'b_omega', _matrix(b_omega, n, b_omega.shape[1] if b_omega.ndim == 2 else 0, 'B_ω'))
        object.__setattr__(self, 'd_nu', _matrix(d_nu, m, d_nu.shape[1] if d_nu.ndim == 2 else 0, 'D_ν'))

        if self.g.in_dim != self.n_vg or self.g.out_dim != self.n_g:
            raise DimensionMismatchError(
                f"g 维度 ({self.g.in_dim}→{self.g.out_dim}) 与 V_g / S_g ({self.n_vg}→{self.n_g}) 不一致"
            )
        if self.eta_true is not None and (
                self.eta_true.in_dim != self.n_veta or self.eta_true.out_dim != self.n_eta):
            raise DimensionMismatchError(
                f"η 维度 ({self.eta_true.in_dim}→{self.eta_true.out_dim}) 与 V_η / S_η "
                f"({self.n_veta}→{self.n_eta}) 不一致"
            )
        if any(v < 0 for v in self.lipschitz_g):
            raise ValueError("Lipschitz 常数必须非负")

        g0 = self.g(np.zeros(self.n_vg), np.zeros(self.l))
        if np.any(g0 != 0.0):
            raise ValueError("g(0, 0) 必须为 0（原点是平衡点）")

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def l(self) -> int:
        return self.b_u.shape[1]

    @property
    def m(self) -> int:
        return self.c.shape[0]

    @property
    def n_g(self) -> int:
        return self.s_g.shape[1]

    @property
    def n_vg(self) -> int:
        return self.v_g.shape[0]

    @property
    def n_eta(self) -> int:
        return self.s_eta.shape[1]

    @property
    def n_veta(self) -> int:
        return self.v_eta.shape[0]

    @property
    def n_omega(self) -> int:
        return self.b_omega.shape[1]

    @property
    def m_nu(self) -> int:
        return self.d_nu.shape[1]

    def output(self, x: np.ndarray, nu: Optional[np.ndarray] = None) -> np.ndarray:
        """y = C x + D_ν ν"""
        y = np.asarray(x, dtype=float) @ self.c.T
        if nu is not None:
            y = y + np.asarray(nu, dtype=float) @ self.d_nu.T
        return y


def _check_last(arr: np.ndarray, dim: int, name: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != dim:
        raise DimensionMismatchError(f"{name} 维度 {arr.shape} 与期望 {dim} 不一致")
    return arr


def known_part(model: SystemModel, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """A x + B_u u + S_g g(V_g x, u)，支持 (..., n) 批量"""
    x = _check_last(x, model.n, 'x')
    u = _check_last(u, model.l, 'u') if model.l else np.zeros(x.shape[:-1] + (0,))
    rhs = x @ model.a.T + u @ model.b_u.T
    if model.n_g:
        rhs = rhs + model.g(x @ model.v_g.T, u) @ model.s_g.T
    return rhs


def eval_system_rhs(model: SystemModel, x: np.ndarray, u: np.ndarray,
                    omega: Optional[np.ndarray] = None,
                    eta_override: Optional[UncertaintyFn] = None) -> np.ndarray:
    """
    系统右端 A x + B_u u + S_g g(V_g x, u) + S_η η(V_η x, u) + B_ω ω

    Args:
        model: 系统模型
        x: 状态 (..., n)
        u: 输入 (..., l)
        omega: 扰动 (..., n_ω)，None 表示 0
        eta_override: 替代真实不确定性的函数 (s, u) -> (..., n_η)

    Returns:
        ẋ (..., n)

    Raises:
        DimensionMismatchError: 维度不一致
        ValueError: n_η > 0 时既没有真实不确定性也没有替代函数
    """
    rhs = known_part(model, x, u)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float) if model.l else np.zeros(x.shape[:-1] + (0,))
    if model.n_eta:
        eta_fn = eta_override if eta_override is not None else model.eta_true
        if eta_fn is None:
            raise ValueError("系统缺少真实不确定性 η，且未提供替代函数")
        eta = np.asarray(eta_fn(x @ model.v_eta.T, u), dtype=float)
        rhs = rhs + _check_last(eta, model.n_eta, 'η') @ model.s_eta.T
    if omega is not None and model.n_omega:
        rhs = rhs + _check_last(omega, model.n_omega, 'ω') @ model.b_omega.T
    return rhs
