"""
Truncated momentum lattice on the 2-torus and the Bloch sector it lives in.

Basis functions are e^{i(beta + k).x} / (2 pi) for integer labels k with
|k_1|, |k_2| <= K. Label (k1, k2) sits at flat index (k1 + K) * n + (k2 + K),
n = 2K + 1, so a flat amplitude vector reshapes to an (n, n) grid whose axis 0
is k1 and axis 1 is k2.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from src.utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

Label = Tuple[int, int]


@dataclass(frozen=True)
class LatticeSpec:
    """Mode window |k_i| <= K"""

    K: int

    def __post_init__(self):
        if isinstance(self.K, bool) or not isinstance(self.K, (int, np.integer)):
            raise InvalidArgumentError(f"cutoff K must be an integer, got {self.K!r}")
        if self.K < 1:
            raise InvalidArgumentError(f"cutoff K must be >= 1, got {self.K}")

    @property
    def n(self) -> int:
        return 2 * self.K + 1

    @property
    def d(self) -> int:
        return self.n * self.n

    @property
    def axis_labels(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def label_grids(self) -> Tuple[np.ndarray, np.ndarray]:
        """k1 and k2 as (n, n) integer grids"""
        return np.meshgrid(self.axis_labels, self.axis_labels, indexing="ij")

    def contains(self, label: Sequence[int]) -> bool:
        return all(abs(int(c)) <= self.K for c in label)

    def index_of(self, label: Sequence[int]) -> int:
        if len(label) != 2 or not self.contains(label):
            raise InvalidArgumentError(f"mode {tuple(label)} outside window K={self.K}")
        k1, k2 = int(label[0]), int(label[1])
        return (k1 + self.K) * self.n + (k2 + self.K)

    def label_of(self, index: int) -> Label:
        if not 0 <= int(index) < self.d:
            raise InvalidArgumentError(f"index {index} outside [0, {self.d})")
        i1, i2 = divmod(int(index), self.n)
        return (i1 - self.K, i2 - self.K)


@dataclass(frozen=True)
class BlochSector:
    """Quasimomentum offset beta plus the integer part of p0"""

    beta: Tuple[float, float]
    integer_part: Tuple[int, int] = (0, 0)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.shape != (2,) or not np.all(np.isfinite(beta)):
            raise InvalidArgumentError(f"beta must be a finite 2-vector, got {self.beta!r}")
        object.__setattr__(self, "beta", (float(beta[0]), float(beta[1])))
        object.__setattr__(
            self, "integer_part", (int(self.integer_part[0]), int(self.integer_part[1]))
        )

    @property
    def beta_array(self) -> np.ndarray:
        return np.array(self.beta)

    @property
    def p0(self) -> np.ndarray:
        return np.array(self.integer_part, dtype=float) + self.beta_array

    def shifted(self, delta: Sequence[float]) -> "BlochSector":
        """Same integer part, beta moved by delta (finite-difference branches)"""
        beta = self.beta_array + np.asarray(delta, dtype=float)
        return BlochSector(beta=(beta[0], beta[1]), integer_part=self.integer_part)


def reduce_momentum(p0: Sequence[float]) -> BlochSector:
    """Split a real momentum into integer part and beta in [0, 1)"""
    p = np.asarray(p0, dtype=float)
    if p.shape != (2,) or not np.all(np.isfinite(p)):
        raise InvalidArgumentError(f"momentum must be a finite 2-vector, got {p0!r}")
    integer_part = np.floor(p)
    beta = p - integer_part
    # floor of a value a hair below an integer can leave beta == 1.0
    carry = beta >= 1.0
    beta[carry] -= 1.0
    integer_part[carry] += 1.0
    return BlochSector(beta=(beta[0], beta[1]), integer_part=(int(integer_part[0]), int(integer_part[1])))


def build_lattice(K: int, beta: Sequence[float]) -> Tuple[LatticeSpec, BlochSector]:
    """Build the mode window and the reduced Bloch sector"""
    lattice = LatticeSpec(K)
    sector = reduce_momentum(beta)
    logger.debug(f"Built lattice K={K} (d={lattice.d}), sector beta={sector.beta}")
    return lattice, sector


@dataclass(frozen=True)
class StateVector:
    """Amplitudes over the lattice, shape (d,) or (d, batch) for column stacks"""

    amplitudes: np.ndarray
    beta: Tuple[float, float]
    lattice: LatticeSpec

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim not in (1, 2) or amps.shape[0] != self.lattice.d:
            raise InvalidArgumentError(
                f"amplitudes of shape {amps.shape} do not fit lattice d={self.lattice.d}"
            )
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "beta", (float(self.beta[0]), float(self.beta[1])))

    @classmethod
    def basis(
        cls,
        lattice: LatticeSpec,
        modes: Union[int, Label, Sequence[Label]],
        beta: Sequence[float] = (0.0, 0.0),
    ) -> "StateVector":
        """Unit vector(s) on the given label(s) or flat index"""
        if isinstance(modes, (int, np.integer)):
            amps = np.zeros(lattice.d, dtype=complex)
            amps[int(modes)] = 1.0
            return cls(amps, tuple(beta), lattice)
        modes = list(modes)
        if len(modes) == 2 and all(isinstance(c, (int, np.integer)) for c in modes):
            amps = np.zeros(lattice.d, dtype=complex)
            amps[lattice.index_of(modes)] = 1.0
            return cls(amps, tuple(beta), lattice)
        amps = np.zeros((lattice.d, len(modes)), dtype=complex)
        for column, label in enumerate(modes):
            amps[lattice.index_of(label), column] = 1.0
        return cls(amps, tuple(beta), lattice)

    @classmethod
    def from_grid(cls, grid: np.ndarray, beta: Sequence[float], lattice: LatticeSpec) -> "StateVector":
        shape = (lattice.d,) + grid.shape[2:]
        return cls(grid.reshape(shape), tuple(beta), lattice)

    @property
    def beta_array(self) -> np.ndarray:
        return np.array(self.beta)

    @property
    def batched(self) -> bool:
        return self.amplitudes.ndim == 2

    def grid(self) -> np.ndarray:
        """(n, n) or (n, n, batch) view of the amplitudes"""
        n = self.lattice.n
        return self.amplitudes.reshape((n, n) + self.amplitudes.shape[1:])

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def column_norms_sq(self) -> np.ndarray:
        if not self.batched:
            return np.array([self.norm_sq()])
        return np.einsum("ij,ij->j", self.amplitudes.conj(), self.amplitudes).real

    def inner(self, other: "StateVector") -> complex:
        check_same_lattice(self, other.lattice)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def with_amplitudes(self, amplitudes: np.ndarray, beta: Sequence[float] = None) -> "StateVector":
        return StateVector(amplitudes, self.beta if beta is None else tuple(beta), self.lattice)


def check_same_lattice(v: StateVector, lattice: LatticeSpec):
    if v.lattice != lattice:
        raise InvalidArgumentError(
            f"state on lattice K={v.lattice.K} used with operator on K={lattice.K}"
        )
