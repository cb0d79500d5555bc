"""
Errors, sweep metrics and plotting for the Lyapunov experiments
"""

from .errors import (
    ConfigError,
    DegeneratePerturbationError,
    HeisenbergRelationError,
    InsufficientDataError,
    InvalidArgumentError,
    LyapunovError,
    SpectralDefectError,
    TooLargeError,
)
from .metrics import compare_sweep_points, rate_spread, series_frame, summarize_sweep
from .visualizer import ResultVisualizer

__all__ = [
    'ConfigError', 'DegeneratePerturbationError', 'HeisenbergRelationError', 'InsufficientDataError',
    'InvalidArgumentError', 'LyapunovError', 'SpectralDefectError', 'TooLargeError',
    'compare_sweep_points', 'rate_spread', 'series_frame', 'summarize_sweep',
    'ResultVisualizer',
]
