"""
Singular perturbation density matrix and its trace pairing
"""

from .rho_zero import (
    Branch,
    PerturbationSpec,
    RhoZero,
    TraceEvaluator,
    TracePair,
    build_rho0,
    fd_convergence,
    normalize_traces,
    normalized_trace,
    trace_pair,
)

__all__ = [
    'Branch', 'PerturbationSpec', 'RhoZero', 'TraceEvaluator', 'TracePair', 'build_rho0',
    'fd_convergence', 'normalize_traces', 'normalized_trace', 'trace_pair',
]
