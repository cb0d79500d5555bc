"""
Truncated momentum-lattice Hilbert space on the 2-torus
"""

from .lattice import BlochSector, LatticeSpec, StateVector, build_lattice, reduce_momentum
from .observables import KINDS, ObservableMatrix, apply_observable, observable_set, position_coefficient

__all__ = [
    'LatticeSpec', 'BlochSector', 'StateVector', 'build_lattice', 'reduce_momentum',
    'KINDS', 'ObservableMatrix', 'apply_observable', 'observable_set', 'position_coefficient',
]
