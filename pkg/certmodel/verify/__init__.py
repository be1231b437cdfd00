"""
稳定性证书的事后复核
"""

from .certificate import (
    Certificate, ConditionResidual, check_invariant_set, check_iss, delta_matrix,
    invariance_block, subset_block, verify_result,
)
from .simulation import IssReport, LyapunovSampleReport, iss_bound_simulation, sample_lyapunov_decrease

__all__ = [
    'Certificate', 'ConditionResidual', 'check_invariant_set', 'check_iss', 'delta_matrix',
    'invariance_block', 'subset_block', 'verify_result',
    'IssReport', 'LyapunovSampleReport', 'iss_bound_simulation', 'sample_lyapunov_decrease',
]
