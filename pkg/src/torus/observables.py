"""
Position and momentum observables on the truncated lattice
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import toeplitz

from src.torus.lattice import LatticeSpec, StateVector, check_same_lattice
from src.utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

KINDS = ("position-1", "position-2", "momentum-1", "momentum-2")


def position_coefficient(m: int) -> complex:
    """Fourier coefficient of the sawtooth x on [-pi, pi)"""
    m = int(m)
    if m == 0:
        return 0j
    sign = 1.0 if m % 2 == 0 else -1.0
    return 1j * sign / m


@lru_cache(maxsize=32)
def _position_block(n: int) -> np.ndarray:
    # T[a, b] = c_{a-b}
    offsets = np.arange(n)
    column = np.array([position_coefficient(m) for m in offsets])
    row = np.array([position_coefficient(-m) for m in offsets])
    block = toeplitz(column, row)
    block.flags.writeable = False
    return block


@dataclass(frozen=True)
class ObservableMatrix:
    """One of x1, x2, p1, p2 acting on a lattice"""

    kind: str
    lattice: LatticeSpec

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown observable kind {self.kind!r}, expected one of {KINDS}")

    @property
    def axis(self) -> int:
        return int(self.kind[-1]) - 1

    @property
    def is_momentum(self) -> bool:
        return self.kind.startswith("momentum")

    def position_block(self) -> np.ndarray:
        """Single-axis Toeplitz factor of a position observable"""
        return _position_block(self.lattice.n)

    def momentum_diagonal(self, beta: Sequence[float]) -> np.ndarray:
        """beta_i + k_i over the (n, n) grid"""
        grids = self.lattice.label_grids()
        return beta[self.axis] + grids[self.axis].astype(float)

    def dense(self, beta: Sequence[float] = (0.0, 0.0)) -> np.ndarray:
        """Full d x d matrix in the flat lattice ordering"""
        n = self.lattice.n
        if self.is_momentum:
            return np.diag(self.momentum_diagonal(beta).ravel()).astype(complex)
        eye = np.eye(n)
        block = self.position_block()
        if self.axis == 0:
            return np.kron(block, eye)
        return np.kron(eye, block)


def observable_set(lattice: LatticeSpec, kinds: Sequence[str] = KINDS):
    return [ObservableMatrix(kind, lattice) for kind in kinds]


def apply_observable(obs: ObservableMatrix, v: StateVector) -> StateVector:
    """Structured action of a position or momentum observable"""
    check_same_lattice(v, obs.lattice)
    grid = v.grid()
    if obs.is_momentum:
        diag = obs.momentum_diagonal(v.beta)
        if v.batched:
            diag = diag[..., np.newaxis]
        return StateVector.from_grid(diag * grid, v.beta, v.lattice)

    block = obs.position_block()
    if obs.axis == 0:
        out = np.tensordot(block, grid, axes=([1], [0]))
    else:
        out = np.moveaxis(np.tensordot(block, grid, axes=([1], [1])), 0, 1)
    return StateVector.from_grid(out, v.beta, v.lattice)
