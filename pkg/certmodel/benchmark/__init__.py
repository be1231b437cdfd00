"""
侧倾平面基准：模型、实验流程与误差直方图
"""

from .roll_plane import C_SEL, RollPlaneParams, build_roll_plane, mechanical_matrices, true_uncertainty_model
from .histogram import Histogram, histogram, histogram_table
from .experiment import (
    PRIOR_ONLY, ExperimentReport, ExperimentSpec, TrainingData, default_learn_configs,
    evaluate_models, fit_sets, learn_label, prepare_training, run_basis_sweep, run_experiment,
    simulate_system, train_models,
)

__all__ = [
    'C_SEL', 'RollPlaneParams', 'build_roll_plane', 'mechanical_matrices', 'true_uncertainty_model',
    'Histogram', 'histogram', 'histogram_table',
    'PRIOR_ONLY', 'ExperimentReport', 'ExperimentSpec', 'TrainingData', 'default_learn_configs',
    'evaluate_models', 'fit_sets', 'learn_label', 'prepare_training', 'run_basis_sweep', 'run_experiment',
    'simulate_system', 'train_models',
]
