"""
不确定性-状态估计器：增广、SDP 设计、运行与增益校验
"""

from .augment import AugmentedSystem, augment
from .design import BLOCK_ORDER, EstimatorConfig, assemble_estimator, design_filter, noise_gain_bound
from .filter import EstimatorFilter, FilterRun, run_filter
from .dataset import estimation_error, make_labeled_dataset
from .gains import GainReport, simulate_error_dynamics, simulate_joint, verify_gain_bounds

__all__ = [
    'AugmentedSystem', 'augment',
    'BLOCK_ORDER', 'EstimatorConfig', 'assemble_estimator', 'design_filter', 'noise_gain_bound',
    'EstimatorFilter', 'FilterRun', 'run_filter',
    'estimation_error', 'make_labeled_dataset',
    'GainReport', 'simulate_error_dynamics', 'simulate_joint', 'verify_gain_bounds',
]
