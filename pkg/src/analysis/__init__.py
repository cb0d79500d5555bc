"""
Growth fits, cat-map oracle and spectral diagnostics
"""

from .cat_oracle import OMEGA, CatOracle, cat_oracle_power, unstable_direction
from .growth import (
    BOUNDED,
    EXPONENTIAL,
    POLYNOMIAL,
    GrowthReport,
    SensitivityWitness,
    TraceSeries,
    fit_growth,
    run_series,
    run_series_with,
    sensitivity_probe,
    truncation_probe,
)
from .spectral import (
    CharacteristicProbe,
    CharacteristicRecord,
    FloquetSpectrum,
    KernelProfile,
    SpectralKernel,
    build_kernel,
    characteristic_gradient_check,
    characteristic_probe,
    diagonalize,
    kernel_profile,
    parseval_defect,
    reconstruct_trace,
    reconstruction_errors,
)

__all__ = [
    'OMEGA', 'CatOracle', 'cat_oracle_power', 'unstable_direction',
    'BOUNDED', 'EXPONENTIAL', 'POLYNOMIAL', 'GrowthReport', 'SensitivityWitness', 'TraceSeries',
    'fit_growth', 'run_series', 'run_series_with', 'sensitivity_probe', 'truncation_probe',
    'CharacteristicProbe', 'CharacteristicRecord', 'FloquetSpectrum', 'KernelProfile',
    'SpectralKernel', 'build_kernel', 'characteristic_gradient_check', 'characteristic_probe',
    'diagonalize', 'kernel_profile', 'parseval_defect', 'reconstruct_trace', 'reconstruction_errors',
]
