"""
模型表示：已知系统、基函数库、不确定性模型、扩展模型与 Lipschitz 元数据
"""

from .nonlinear import (
    Nonlinearity, ZeroMap, ScaledTanh, Polynomial, LinearMap, nonlinearity_from_dict,
)
from .basis import BasisLibrary, BASIS_CHOICES
from .system import SystemModel, eval_system_rhs, known_part
from .extended import (
    UncertaintyModel, StabilityCertificate, ExtendedModel, eval_extended_rhs,
)
from .lipschitz import estimate_lipschitz, validate_lipschitz

__all__ = [
    'Nonlinearity', 'ZeroMap', 'ScaledTanh', 'Polynomial', 'LinearMap', 'nonlinearity_from_dict',
    'BasisLibrary', 'BASIS_CHOICES',
    'SystemModel', 'eval_system_rhs', 'known_part',
    'UncertaintyModel', 'StabilityCertificate', 'ExtendedModel', 'eval_extended_rhs',
    'estimate_lipschitz', 'validate_lipschitz',
]
