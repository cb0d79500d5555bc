"""
Kicked dynamics on the torus lattice
"""

from .kicks import DEFAULT_G, KickModel, kick_coefficients
from .floquet import (
    ABSORBING,
    PERIODIC,
    FloquetOp,
    LeakageRecord,
    apply,
    apply_adjoint,
    build_floquet,
    check_heisenberg_relations,
    evolve,
    extract_momentum_map,
    extract_position_map,
    heisenberg_matrix_element,
)

__all__ = [
    'DEFAULT_G', 'KickModel', 'kick_coefficients',
    'ABSORBING', 'PERIODIC', 'FloquetOp', 'LeakageRecord', 'apply', 'apply_adjoint',
    'build_floquet', 'check_heisenberg_relations', 'evolve', 'extract_momentum_map',
    'extract_position_map', 'heisenberg_matrix_element',
]
