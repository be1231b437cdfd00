"""
椭球集合：包络拟合、包含关系与不变集仿真检验
"""

from .ellipsoid import Ellipsoid, contains, check_subset, regularize
from .fitting import fit_bounding, DEFAULT_INFLATION
from .invariance import InvarianceReport, empirical_invariance, admissible_input

__all__ = [
    'Ellipsoid', 'contains', 'check_subset', 'regularize',
    'fit_bounding', 'DEFAULT_INFLATION',
    'InvarianceReport', 'empirical_invariance', 'admissible_input',
]
