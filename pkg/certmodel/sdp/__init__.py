"""
SDP 核心：对称矩阵线性代数、块 LMI 拼装与锥求解契约
"""

from .linalg import (
    SymMatrix, as_array, min_eig, max_eig, psd_factor, schur_reduce,
    default_jitter, is_hurwitz, solve_lyapunov,
)
from .problem import (
    LmiProblem, LmiConstraint, SdpSolution, ConstraintResidual,
    sym_bmat, solve, DEFAULT_STRICT_EPS, DEFAULT_TOL,
)

__all__ = [
    'SymMatrix', 'as_array', 'min_eig', 'max_eig', 'psd_factor', 'schur_reduce',
    'default_jitter', 'is_hurwitz', 'solve_lyapunov',
    'LmiProblem', 'LmiConstraint', 'SdpSolution', 'ConstraintResidual',
    'sym_bmat', 'solve', 'DEFAULT_STRICT_EPS', 'DEFAULT_TOL',
]
