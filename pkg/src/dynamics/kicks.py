"""
Kick families for the Floquet operator U_F = U_0 U_K.

Three variants are supported: free motion (no kick), a position kick
exp(i alpha g(x)) with g a real trigonometric polynomial, and an integer
cat-map kick that moves momentum labels by a det-1 matrix.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import fft

from src.utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

FREE = "free"
POSITION_KICK = "position_kick"
CAT_KICK = "cat_kick"
VARIANTS = (FREE, POSITION_KICK, CAT_KICK)

CAT_ORIENTATIONS = ("M", "M_inv", "M_T", "M_inv_T")

COEFFICIENT_CUTOFF = 1e-14
OVERSAMPLING = 4
MAX_GRID = 4096
RESONANCE_TOL = 1e-12

GMode = Tuple[Tuple[int, int], complex]

# g(x) = cos x1 + cos x2
DEFAULT_G: Tuple[GMode, ...] = (
    ((1, 0), 0.5 + 0j),
    ((-1, 0), 0.5 + 0j),
    ((0, 1), 0.5 + 0j),
    ((0, -1), 0.5 + 0j),
)


def _normalize_g(g: Sequence) -> Tuple[GMode, ...]:
    merged: Dict[Tuple[int, int], complex] = {}
    for entry in g:
        mode, coefficient = entry
        if len(mode) != 2:
            raise InvalidArgumentError(f"g mode {mode!r} must have two integer components")
        key = (int(mode[0]), int(mode[1]))
        if key[0] != mode[0] or key[1] != mode[1]:
            raise InvalidArgumentError(f"g mode {mode!r} must be integer")
        merged[key] = merged.get(key, 0j) + complex(coefficient)
    return tuple(sorted(merged.items()))


def _check_real(g: Tuple[GMode, ...]):
    coefficients = dict(g)
    scale = max([abs(c) for c in coefficients.values()] + [1.0])
    for mode, c in coefficients.items():
        mirror = coefficients.get((-mode[0], -mode[1]), 0j)
        if abs(mirror - np.conj(c)) > 1e-12 * scale:
            raise InvalidArgumentError(
                f"g is not real-valued: coefficient of {(-mode[0], -mode[1])} is {mirror}, "
                f"expected conjugate of {c}"
            )


def resonance_order(tau: float) -> Optional[int]:
    """m with tau = 4 pi m, or None"""
    m = int(round(tau / (4.0 * np.pi)))
    if m >= 1 and abs(tau - 4.0 * np.pi * m) <= RESONANCE_TOL * max(1.0, tau):
        return m
    return None


@dataclass(frozen=True)
class KickModel:
    """Kick variant, strength and period"""

    variant: str
    tau: float
    resonant: bool = False
    g: Tuple[GMode, ...] = DEFAULT_G
    alpha: float = 0.0
    M: Optional[Tuple[Tuple[int, int], Tuple[int, int]]] = None
    cat_orientation: Optional[str] = None
    resonant_m: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidArgumentError(f"unknown kick variant {self.variant!r}")
        if not np.isfinite(self.tau) or self.tau <= 0:
            raise InvalidArgumentError(f"kick period tau must be positive, got {self.tau}")
        m = resonance_order(self.tau)
        if self.resonant and m is None:
            raise InvalidArgumentError(f"resonant flag needs tau = 4 pi m, got tau={self.tau}")
        object.__setattr__(self, "resonant_m", m if self.resonant else None)

        if self.variant == POSITION_KICK:
            if not np.isfinite(self.alpha):
                raise InvalidArgumentError(f"kick strength alpha must be finite, got {self.alpha}")
            g = _normalize_g(self.g)
            if not g:
                raise InvalidArgumentError("position kick needs at least one g coefficient")
            _check_real(g)
            object.__setattr__(self, "g", g)

        if self.variant == CAT_KICK:
            matrix = np.asarray(self.M)
            if matrix.shape != (2, 2):
                raise InvalidArgumentError(f"cat matrix must be 2x2, got shape {matrix.shape}")
            if not np.all(np.equal(np.mod(matrix, 1), 0)):
                raise InvalidArgumentError(f"cat matrix must have integer entries, got {self.M}")
            ints = matrix.astype(np.int64)
            det = int(ints[0, 0] * ints[1, 1] - ints[0, 1] * ints[1, 0])
            if det != 1:
                raise InvalidArgumentError(f"cat matrix must have determinant 1, got {det}")
            if not self.resonant:
                raise InvalidArgumentError("cat kicks are only defined at resonance (tau = 4 pi m)")
            if self.cat_orientation is not None and self.cat_orientation not in CAT_ORIENTATIONS:
                raise InvalidArgumentError(
                    f"cat orientation must be one of {CAT_ORIENTATIONS}, got {self.cat_orientation!r}"
                )
            object.__setattr__(self, "M", tuple(tuple(int(x) for x in row) for row in ints))

    @classmethod
    def free(cls, tau: float = 4.0 * np.pi, resonant: Optional[bool] = None) -> "KickModel":
        if resonant is None:
            resonant = resonance_order(tau) is not None
        return cls(FREE, tau=tau, resonant=resonant)

    @classmethod
    def position_kick(
        cls,
        alpha: float,
        g: Sequence = DEFAULT_G,
        tau: float = 4.0 * np.pi,
        resonant: Optional[bool] = None,
    ) -> "KickModel":
        if resonant is None:
            resonant = resonance_order(tau) is not None
        return cls(POSITION_KICK, tau=tau, resonant=resonant, g=tuple(g), alpha=float(alpha))

    @classmethod
    def cat_kick(
        cls,
        M: Sequence[Sequence[int]] = ((1, 1), (1, 2)),
        tau: float = 4.0 * np.pi,
        orientation: Optional[str] = None,
    ) -> "KickModel":
        return cls(
            CAT_KICK,
            tau=tau,
            resonant=True,
            M=tuple(tuple(row) for row in M),
            cat_orientation=orientation,
        )

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.M, dtype=np.int64)


def orientation_matrix(M: np.ndarray, orientation: str) -> np.ndarray:
    """Integer matrix S acting on momentum labels for a named orientation"""
    M = np.asarray(M, dtype=np.int64)
    inverse = np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]], dtype=np.int64)
    return {
        "M": M,
        "M_inv": inverse,
        "M_T": M.T.copy(),
        "M_inv_T": inverse.T.copy(),
    }[orientation]


def _evaluate_g(g: Tuple[GMode, ...], grid_size: int) -> np.ndarray:
    x = -np.pi + 2.0 * np.pi * np.arange(grid_size) / grid_size
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    values = np.zeros((grid_size, grid_size), dtype=complex)
    for (m1, m2), c in g:
        values += c * np.exp(1j * (m1 * x1 + m2 * x2))
    return values.real


def kick_coefficients(
    g: Tuple[GMode, ...], alpha: float, cutoff: float = COEFFICIENT_CUTOFF
) -> Tuple[np.ndarray, int]:
    """
    Fourier coefficients of exp(i alpha g(x)) on [-pi, pi)^2.

    Returns (coefficients, B) where coefficients[m1 + B, m2 + B] holds the
    coefficient of e^{i m.x} for |m_i| <= B. The sampling grid is doubled
    until it oversamples the retained band by OVERSAMPLING; entries below
    cutoff are set to zero.
    """
    if alpha == 0:
        return np.ones((1, 1), dtype=complex), 0

    g_band = max(max(abs(m1), abs(m2)) for (m1, m2), _ in g)
    strength = abs(alpha) * sum(abs(c) for _, c in g)
    guess = g_band * (int(np.ceil(strength)) + 4)
    grid_size = 16
    while grid_size < OVERSAMPLING * (2 * guess + 1):
        grid_size *= 2

    while True:
        f = np.exp(1j * alpha * _evaluate_g(g, grid_size))
        spectrum = fft.fft2(f) / grid_size ** 2
        m = fft.fftfreq(grid_size, d=1.0 / grid_size).astype(int)
        # grid starts at -pi, which flips the sign of odd modes
        sign = np.where((m[:, None] + m[None, :]) % 2 == 0, 1.0, -1.0)
        spectrum = spectrum * sign
        significant = np.abs(spectrum) > cutoff
        m1, m2 = np.meshgrid(m, m, indexing="ij")
        band = int(np.max(np.maximum(np.abs(m1), np.abs(m2))[significant])) if significant.any() else 0
        if OVERSAMPLING * (2 * band + 1) <= grid_size:
            break
        if grid_size >= MAX_GRID:
            raise InvalidArgumentError(
                f"kick alpha={alpha} needs more than {MAX_GRID} grid points per axis"
            )
        grid_size *= 2

    coefficients = np.zeros((2 * band + 1, 2 * band + 1), dtype=complex)
    labels = np.arange(-band, band + 1)
    coefficients[:, :] = spectrum[np.ix_(labels % grid_size, labels % grid_size)]
    coefficients[np.abs(coefficients) <= cutoff] = 0.0
    logger.debug(f"Kick coefficients: alpha={alpha}, band={band}, grid={grid_size}")
    return coefficients, band
