"""
仿真：多正弦输入、噪声、RK4 积分与输出误差指标
"""

from .signals import (
    Signal, ZeroSignal, ConstantSignal, SampledSignal, Multisine, MultisineSpec,
    MultisineBank, SinusoidalNoise, generate_multisine, band_limited_noise,
)
from .integrator import Trajectory, integrate, integrate_batch, time_grid, DEFAULT_DT
from .metrics import output_error

__all__ = [
    'Signal', 'ZeroSignal', 'ConstantSignal', 'SampledSignal', 'Multisine', 'MultisineSpec',
    'MultisineBank', 'SinusoidalNoise', 'generate_multisine', 'band_limited_noise',
    'Trajectory', 'integrate', 'integrate_batch', 'time_grid', 'DEFAULT_DT',
    'output_error',
]
