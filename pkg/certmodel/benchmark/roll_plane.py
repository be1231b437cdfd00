"""
车辆侧倾平面四自由度模型
状态 x = (q₁..q₄, q̇₁..q̇₄)，输出为车身与两侧轮胎的相对位移与相对速度
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict

import numpy as np

from certmodel.errors import ConfigError, SingularBlockError
from certmodel.models.basis import BasisLibrary
from certmodel.models.extended import UncertaintyModel
from certmodel.models.nonlinear import Polynomial, ScaledTanh
from certmodel.models.system import SystemModel

logger = logging.getLogger(__name__)

# 相对位移选择矩阵 (q₁ − q₃, q₂ − q₄)
C_SEL = np.array([[1.0, 0.0, -1.0, 0.0],
                  [0.0, 1.0, 0.0, -1.0]])


@dataclass(frozen=True)
class RollPlaneParams:
    """
    模型参数（SI 单位）

    Attributes:
        m: 车身质量
        m_t1, m_t2: 轮胎质量
        inertia: 侧倾转动惯量
        track: 轮距 L
        c1, c2: 悬架线性阻尼
        c1_n, c2_n: 非线性阻尼系数
        k1, k2: 悬架线性刚度（先验值）
        k_t1, k_t2: 轮胎刚度
        k1_n, k2_n: 真实三次刚度
        dk1, dk2: 真实线性刚度偏差
    """
    m: float = 580.0
    m_t1: float = 36.26
    m_t2: float = 36.26
    inertia: float = 63.3316
    track: float = 1.524
    c1: float = 710.70
    c2: float = 710.70
    c1_n: float = 0.71
    c2_n: float = 0.71
    k1: float = 19357.2
    k2: float = 19357.2
    k_t1: float = 96319.76
    k_t2: float = 96319.76
    k1_n: float = 15000.0
    k2_n: float = 15000.0
    dk1: float = 5807.2
    dk2: float = 5807.2

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ConfigError(f"system.params.{name}: 必须为正 ({value})")

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RollPlaneParams':
        known = set(cls.__dataclass_fields__)
        for key in data:
            if key not in known:
                raise ConfigError(f"system.params.{key}: 未知参数")
        return cls(**{k: float(v) for k, v in data.items()})


def mechanical_matrices(p: RollPlaneParams) -> Dict[str, np.ndarray]:
    """M̃, K̃, C̃_damp, K̃_u, S̃"""
    half = p.track / 2.0
    mass = np.array([
        [p.m / 2.0, p.m / 2.0, 0.0, 0.0],
        [-p.inertia / p.track, p.inertia / p.track, 0.0, 0.0],
        [0.0, 0.0, p.m_t1, 0.0],
        [0.0, 0.0, 0.0, p.m_t2],
    ])
    stiffness = np.array([
        [p.k1, p.k2, -p.k1, -p.k2],
        [-half * p.k1, half * p.k2, half * p.k1, -half * p.k2],
        [-p.k1, 0.0, p.k1 + p.k_t1, 0.0],
        [0.0, -p.k2, 0.0, p.k2 + p.k_t2],
    ])
    damping = np.array([
        [p.c1, p.c2, -p.c1, -p.c2],
        [-half * p.c1, half * p.c2, half * p.c1, -half * p.c2],
        [-p.c1, 0.0, p.c1, 0.0],
        [0.0, -p.c2, 0.0, p.c2],
    ])
    k_u = np.array([[0.0, 0.0], [0.0, 0.0], [p.k_t1, 0.0], [0.0, p.k_t2]])
    s_tilde = np.array([[1.0, 1.0], [-half, half], [-1.0, 0.0], [0.0, -1.0]])
    return {'mass': mass, 'stiffness': stiffness, 'damping': damping, 'k_u': k_u, 's': s_tilde}


def build_roll_plane(params: RollPlaneParams = RollPlaneParams()) -> SystemModel:
    """
    构造先验模型（含真实不确定性 η = δk̃ V_η x + k̃_n (V_η x)∘3，用于生成数据）

    Returns:
        SystemModel：n = 8, m = 4, l = 2, n_η = n_g = 2

    Raises:
        SingularBlockError: 质量矩阵奇异
        ValueError: 左右两侧不确定性参数不对称
    """
    mats = mechanical_matrices(params)
    mass = mats['mass']
    if np.linalg.cond(mass) > 1e12:
        raise SingularBlockError("质量矩阵奇异")
    inv_k = np.linalg.solve(mass, mats['stiffness'])
    inv_c = np.linalg.solve(mass, mats['damping'])
    inv_ku = np.linalg.solve(mass, mats['k_u'])
    inv_s = np.linalg.solve(mass, mats['s'])

    zeros = np.zeros((4, 4))
    a = np.block([[zeros, np.eye(4)], [-inv_k, -inv_c]])
    b_u = np.vstack([np.zeros((4, 2)), inv_ku])
    s_eta = np.vstack([np.zeros((4, 2)), -inv_s])
    c = np.block([[C_SEL, np.zeros((2, 4))], [np.zeros((2, 4)), C_SEL]])
    v_g = np.hstack([np.zeros((2, 4)), 10.0 * C_SEL])
    v_eta = np.hstack([C_SEL, np.zeros((2, 4))])

    if params.dk1 != params.dk2 or params.k1_n != params.k2_n:
        raise ValueError("真实不确定性要求左右对称 (dk1 = dk2, k1_n = k2_n)")
    eta_true = Polynomial(2, {1: params.dk1, 3: params.k1_n})
    g = ScaledTanh(2, 0.2 * params.c1_n)

    logger.debug(f"侧倾平面模型: max Re λ(A) = {np.max(np.linalg.eigvals(a).real):.4g}")
    return SystemModel.create(a=a, b_u=b_u, c=c, s_g=s_eta, v_g=v_g, g=g, s_eta=s_eta,
                              v_eta=v_eta, eta_true=eta_true, d_nu=np.eye(4),
                              name='roll-plane')


def true_uncertainty_model(params: RollPlaneParams, basis: BasisLibrary,
                           s_eta: np.ndarray) -> UncertaintyModel:
    """
    精确复现真实 η 的参数 θ = (δk̃ I, 0, k̃_n I 放在三次块上)

    Raises:
        ValueError: 基函数库没有三次块
    """
    if 'cubic' not in basis.blocks:
        raise ValueError(f"基函数 {basis.tag()} 不含三次块，无法精确复现真实不确定性")
    k = basis.in_dim
    theta_n = np.zeros((k, basis.n_h))
    start = basis.blocks.index('cubic') * k
    theta_n[:, start:start + k] = params.k1_n * np.eye(k)
    return UncertaintyModel(params.dk1 * np.eye(k), np.zeros((k, 2)), theta_n, s_eta, basis)
