"""
Floquet operator U_F = U_0 U_K on the truncated lattice.

U_0 multiplies mode k by exp(i |beta + k|^2 tau / 2). The kick acts first:
a momentum-space convolution for position kicks, a label map for cat kicks.
Amplitude pushed outside the window is dropped and reported as leakage;
with boundary="periodic" labels wrap modulo the window width instead and
the operator is exactly unitary.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft

from src.dynamics.kicks import (
    CAT_KICK,
    CAT_ORIENTATIONS,
    POSITION_KICK,
    KickModel,
    kick_coefficients,
    orientation_matrix,
)
from src.torus.lattice import BlochSector, LatticeSpec, StateVector, check_same_lattice
from src.torus.observables import ObservableMatrix, apply_observable
from src.utils.errors import HeisenbergRelationError, InvalidArgumentError

logger = logging.getLogger(__name__)

ABSORBING = "absorbing"
PERIODIC = "periodic"
BOUNDARIES = (ABSORBING, PERIODIC)


@dataclass(frozen=True)
class LeakageRecord:
    """Fraction of the initial weight lost by step n"""

    step: int
    lost_weight: float


def free_phases(model: KickModel, lattice: LatticeSpec, beta: Sequence[float]) -> np.ndarray:
    """Diagonal of U_0 on the (n, n) grid for quasimomentum beta"""
    k1, k2 = lattice.label_grids()
    b1, b2 = float(beta[0]), float(beta[1])
    if model.resonant:
        # exp(i 2 pi m |k|^2) == 1 for integer k, so only the beta terms survive
        phase = 2.0 * np.pi * model.resonant_m * (b1 * b1 + b2 * b2 + 2.0 * (b1 * k1 + b2 * k2))
    else:
        phase = 0.5 * model.tau * ((b1 + k1) ** 2 + (b2 + k2) ** 2)
    return np.exp(1j * phase)


def _broadcast(kernel: np.ndarray, grid: np.ndarray) -> np.ndarray:
    return kernel.reshape(kernel.shape + (1,) * (grid.ndim - 2))


class ConvolutionKick:
    """exp(i alpha g(x)) as a convolution over momentum labels"""

    def __init__(self, coefficients: np.ndarray, band: int, n: int, boundary: str):
        self.coefficients = coefficients
        self.band = band
        self.n = n
        self.boundary = boundary

        if band == 0:
            self.scalar = complex(coefficients[0, 0])
            self.size = n
            self.spectrum = None
            return

        self.scalar = None
        labels = np.arange(-band, band + 1)
        if boundary == PERIODIC:
            self.size = n
            kernel = np.zeros((n, n), dtype=complex)
            rows, cols = np.meshgrid(labels % n, labels % n, indexing="ij")
            np.add.at(kernel, (rows, cols), coefficients)
        else:
            self.size = fft.next_fast_len(n + 2 * band)
            kernel = np.zeros((self.size, self.size), dtype=complex)
            kernel[np.ix_(labels % self.size, labels % self.size)] = coefficients
        self.spectrum = fft.fft2(kernel)

    def _convolve(self, grid: np.ndarray, spectrum: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n = self.n
        padded = np.zeros((self.size, self.size) + grid.shape[2:], dtype=complex)
        padded[:n, :n] = grid
        full = fft.ifft2(fft.fft2(padded, axes=(0, 1)) * _broadcast(spectrum, grid), axes=(0, 1))
        window = full[:n, :n]
        if self.boundary == PERIODIC:
            return window, np.zeros(grid.shape[2:])
        lost = np.sum(np.abs(full) ** 2, axis=(0, 1)) - np.sum(np.abs(window) ** 2, axis=(0, 1))
        return window, np.maximum(lost, 0.0)

    def apply(self, grid: np.ndarray, beta: Tuple[float, float]):
        if self.scalar is not None:
            return self.scalar * grid, beta, np.zeros(grid.shape[2:])
        window, lost = self._convolve(grid, self.spectrum)
        return window, beta, lost

    def adjoint(self, grid: np.ndarray, beta: Tuple[float, float]):
        if self.scalar is not None:
            return np.conj(self.scalar) * grid, beta, np.zeros(grid.shape[2:])
        # kernel conj(c_{-m}) transforms to conj of the forward spectrum
        window, lost = self._convolve(grid, np.conj(self.spectrum))
        return window, beta, lost


class LabelMapKick:
    """Momentum p = beta + k goes to S p; the new sector is S beta mod 1"""

    def __init__(self, S: np.ndarray, lattice: LatticeSpec, boundary: str):
        self.S = np.asarray(S, dtype=np.int64)
        self.S_inv = orientation_matrix(self.S, "M_inv")
        self.lattice = lattice
        self.boundary = boundary
        self._routes: Dict[Tuple[bool, Tuple[float, float]], tuple] = {}

    def _route(self, inverse: bool, beta: Tuple[float, float]):
        key = (inverse, beta)
        if key not in self._routes:
            S = self.S_inv if inverse else self.S
            mapped = S.astype(float) @ np.array(beta)
            shift = np.floor(mapped)
            new_beta = mapped - shift
            new_beta[new_beta >= 1.0] -= 1.0
            K, n = self.lattice.K, self.lattice.n
            k1, k2 = self.lattice.label_grids()
            labels = np.stack([k1.ravel(), k2.ravel()])
            image = S @ labels + shift.astype(np.int64)[:, None]
            if self.boundary == PERIODIC:
                image = (image + K) % n - K
                inside = np.ones(image.shape[1], dtype=bool)
            else:
                inside = np.all(np.abs(image) <= K, axis=0)
            source = np.flatnonzero(inside)
            target = (image[0, inside] + K) * n + (image[1, inside] + K)
            self._routes[key] = (source, target, ~inside, (float(new_beta[0]), float(new_beta[1])))
        return self._routes[key]

    def _move(self, grid: np.ndarray, beta, inverse: bool):
        source, target, dropped, new_beta = self._route(inverse, tuple(beta))
        flat = grid.reshape((self.lattice.d,) + grid.shape[2:])
        out = np.zeros_like(flat)
        out[target] = flat[source]
        lost = np.sum(np.abs(flat[dropped]) ** 2, axis=0)
        return out.reshape(grid.shape), new_beta, lost

    def apply(self, grid: np.ndarray, beta):
        return self._move(grid, beta, inverse=False)

    def adjoint(self, grid: np.ndarray, beta):
        return self._move(grid, beta, inverse=True)


class IdentityKick:
    def apply(self, grid, beta):
        return grid, beta, np.zeros(grid.shape[2:])

    adjoint = apply


@dataclass(frozen=True)
class FloquetOp:
    """One kick period: kick first, then free phases of the post-kick sector"""

    model: KickModel
    lattice: LatticeSpec
    sector: BlochSector
    free_phases: np.ndarray = field(repr=False, compare=False)
    kick_action: object = field(repr=False, compare=False)
    boundary: str = ABSORBING
    orientation: Optional[str] = None

    def phases_for(self, beta: Sequence[float]) -> np.ndarray:
        if tuple(beta) == self.sector.beta:
            return self.free_phases
        return free_phases(self.model, self.lattice, beta)

    def with_sector(self, sector: BlochSector) -> "FloquetOp":
        """Same kick, free phases recomputed for another sector"""
        return replace(self, sector=sector, free_phases=free_phases(self.model, self.lattice, sector.beta))

    def apply(self, v: StateVector, step: int = 1) -> Tuple[StateVector, LeakageRecord]:
        """U_F v; the record carries the weight dropped in this step, labelled `step`"""
        check_same_lattice(v, self.lattice)
        grid, beta, lost = self.kick_action.apply(v.grid(), v.beta)
        grid = _broadcast(self.phases_for(beta), grid) * grid
        return StateVector.from_grid(grid, beta, self.lattice), _record(v, lost, step)

    def apply_adjoint(self, v: StateVector, step: int = 1) -> Tuple[StateVector, LeakageRecord]:
        check_same_lattice(v, self.lattice)
        grid = _broadcast(np.conj(self.phases_for(v.beta)), v.grid()) * v.grid()
        grid, beta, lost = self.kick_action.adjoint(grid, v.beta)
        return StateVector.from_grid(grid, beta, self.lattice), _record(v, lost, step)

    def dense(self) -> np.ndarray:
        """d x d matrix of U_F in this sector, built column by column"""
        identity = StateVector(np.eye(self.lattice.d, dtype=complex), self.sector.beta, self.lattice)
        image, _ = self.apply(identity)
        return image.amplitudes


def _record(v: StateVector, lost: np.ndarray, step: int) -> LeakageRecord:
    total = v.norm_sq()
    fraction = float(np.sum(lost)) / total if total > 0 else 0.0
    return LeakageRecord(step=step, lost_weight=min(max(fraction, 0.0), 1.0))


UNIT_SHIFTS = ((1, 0), (0, 1))


def shift_labels(grid: np.ndarray, m: Sequence[int]) -> np.ndarray:
    """exp(i m.x) on a (n, n, ...) grid: label k goes to k + m, overflow is dropped"""
    n = grid.shape[0]
    out = np.zeros_like(grid)
    source = tuple(slice(max(0, -int(s)), n - max(0, int(s))) for s in m)
    target = tuple(slice(max(0, int(s)), n - max(0, -int(s))) for s in m)
    out[target] = grid[source]
    return out


def _single_label(amplitudes: np.ndarray, lattice: LatticeSpec) -> Tuple[int, int]:
    """Label carrying a unit-modulus amplitude; anything else means the orbit left the window"""
    index = int(np.argmax(np.abs(amplitudes)))
    if abs(abs(amplitudes[index]) - 1.0) > 1e-12:
        raise InvalidArgumentError(f"translated orbit leaves the K={lattice.K} window")
    return lattice.label_of(index)


def _calibrate_orientation(model: KickModel) -> str:
    """
    First orientation whose kick reproduces both U_K^dag p U_K = M p and
    U_K^dag x U_K = M^-T x on unit modes.
    """
    M = model.matrix
    position_map = np.rint(np.linalg.inv(M).T).astype(np.int64)
    reach = int(np.max(np.abs(M))) + 1
    lattice = LatticeSpec(max(4, 2 * reach))
    for orientation in CAT_ORIENTATIONS:
        kick = LabelMapKick(orientation_matrix(M, orientation), lattice, ABSORBING)
        if not np.array_equal(_kick_momentum_map(kick, lattice), M):
            continue
        if np.array_equal(_kick_position_map(kick, lattice), position_map):
            logger.debug(f"Cat orientation calibrated to {orientation}")
            return orientation
    raise HeisenbergRelationError(
        f"no orientation of {M.tolist()} satisfies U^dag p U = M p and U^dag x U = M^-T x"
    )


def _kick_position_map(kick, lattice: LatticeSpec) -> np.ndarray:
    """Rows j_i with U_K^dag exp(i e_i.x) U_K = exp(i j_i.x), at beta = 0"""
    origin = StateVector.basis(lattice, (0, 0))
    grid, beta, _ = kick.apply(origin.grid(), origin.beta)
    rows = []
    for m in UNIT_SHIFTS:
        back, _, _ = kick.adjoint(shift_labels(grid, m), beta)
        rows.append(_single_label(back.reshape(lattice.d), lattice))
    return np.array(rows, dtype=np.int64)


def _kick_momentum_map(kick, lattice: LatticeSpec) -> np.ndarray:
    """<e_j| U_K^dag p_i U_K |e_j> - <0| ... |0> at beta = 0, rounded to integers"""
    columns = StateVector.basis(lattice, [(0, 0), (1, 0), (0, 1)])
    grid, beta, _ = kick.apply(columns.grid(), columns.beta)
    moved = StateVector.from_grid(grid, beta, lattice)
    result = np.zeros((2, 2))
    for i, kind in enumerate(("momentum-1", "momentum-2")):
        pushed = apply_observable(ObservableMatrix(kind, lattice), moved)
        back, _, _ = kick.adjoint(pushed.grid(), pushed.beta)
        back = back.reshape(columns.amplitudes.shape)
        diagonal = np.einsum("ij,ij->j", columns.amplitudes.conj(), back).real
        result[i] = diagonal[1:] - diagonal[0]
    return np.rint(result).astype(np.int64)


def build_floquet(
    model: KickModel,
    lattice: LatticeSpec,
    sector: BlochSector,
    boundary: str = ABSORBING,
) -> FloquetOp:
    """Assemble U_F for a kick model on a lattice and sector"""
    if boundary not in BOUNDARIES:
        raise InvalidArgumentError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")

    orientation = None
    if model.variant == POSITION_KICK:
        coefficients, band = kick_coefficients(model.g, model.alpha)
        action = ConvolutionKick(coefficients, band, lattice.n, boundary)
        logger.info(f"Position kick: alpha={model.alpha}, band={band}, K={lattice.K}, boundary={boundary}")
    elif model.variant == CAT_KICK:
        orientation = model.cat_orientation or _calibrate_orientation(model)
        action = LabelMapKick(orientation_matrix(model.matrix, orientation), lattice, boundary)
        logger.info(f"Cat kick: M={model.M}, orientation={orientation}, K={lattice.K}, boundary={boundary}")
    else:
        action = IdentityKick()
        logger.info(f"Free motion: tau={model.tau}, resonant={model.resonant}, K={lattice.K}")

    return FloquetOp(
        model=model,
        lattice=lattice,
        sector=sector,
        free_phases=free_phases(model, lattice, sector.beta),
        kick_action=action,
        boundary=boundary,
        orientation=orientation,
    )


def apply(op: FloquetOp, v: StateVector) -> Tuple[StateVector, LeakageRecord]:
    return op.apply(v)


def apply_adjoint(op: FloquetOp, v: StateVector) -> Tuple[StateVector, LeakageRecord]:
    return op.apply_adjoint(v)


def evolve(op: FloquetOp, v: StateVector, steps: int) -> Tuple[StateVector, List[LeakageRecord]]:
    """U_F^steps v with cumulative leakage relative to the initial weight"""
    if steps < 0:
        raise InvalidArgumentError(f"step count must be >= 0, got {steps}")
    initial = v.norm_sq()
    records = []
    for step in range(1, steps + 1):
        v, _ = op.apply(v, step)
        lost = 1.0 - v.norm_sq() / initial if initial > 0 else 0.0
        lost = min(max(lost, 0.0), 1.0)
        if records:
            lost = max(lost, records[-1].lost_weight)
        records.append(LeakageRecord(step=step, lost_weight=lost))
    return v, records


def heisenberg_matrix_element(
    op: FloquetOp, bra_mode: int, obs: ObservableMatrix, ket_mode: int, n: int
) -> complex:
    """<bra| U^dag^n O U^n |ket> by forward evolution of both basis vectors"""
    if n < 0:
        raise InvalidArgumentError(f"step count must be >= 0, got {n}")
    if obs.lattice != op.lattice:
        raise InvalidArgumentError("observable and operator live on different lattices")
    for mode in (bra_mode, ket_mode):
        if not 0 <= int(mode) < op.lattice.d:
            raise InvalidArgumentError(f"mode index {mode} outside window of size {op.lattice.d}")
    amplitudes = np.zeros((op.lattice.d, 2), dtype=complex)
    amplitudes[int(bra_mode), 0] = 1.0
    amplitudes[int(ket_mode), 1] = 1.0
    columns = StateVector(amplitudes, op.sector.beta, op.lattice)
    evolved, _ = evolve(op, columns, n)
    pushed = apply_observable(obs, evolved)
    return complex(np.vdot(evolved.amplitudes[:, 0], pushed.amplitudes[:, 1]))


def extract_momentum_map(op: FloquetOp, n: int) -> np.ndarray:
    """
    Real 2x2 matrix A with U^dag^n p U^n = A p, read off unit modes.

    Column j is <e_j|p_H|e_j> - <0|p_H|0>; both orbits must stay inside
    the window.
    """
    lattice = op.lattice
    columns = StateVector.basis(lattice, [(0, 0), (1, 0), (0, 1)], op.sector.beta)
    evolved, records = evolve(op, columns, n)
    lost = 1.0 - evolved.column_norms_sq()
    if np.max(lost) > 1e-12:
        raise InvalidArgumentError(f"unit-mode orbit leaves the K={lattice.K} window within {n} steps")
    result = np.zeros((2, 2))
    for i, kind in enumerate(("momentum-1", "momentum-2")):
        pushed = apply_observable(ObservableMatrix(kind, lattice), evolved)
        diagonal = np.einsum("ij,ij->j", evolved.amplitudes.conj(), pushed.amplitudes).real
        result[i] = diagonal[1:] - diagonal[0]
    return result


def extract_position_map(op: FloquetOp, n: int) -> np.ndarray:
    """
    Integer 2x2 matrix B with U^dag^n x U^n = B x, read off the translations
    exp(i e_i.x) acting on the interior mode k = 0.

    Row i is the label displacement j_i in U^dag^n exp(i e_i.x) U^n = exp(i j_i.x).
    """
    lattice = op.lattice
    origin = StateVector.basis(lattice, (0, 0), op.sector.beta)
    evolved, records = evolve(op, origin, n)
    if records and records[-1].lost_weight > 1e-12:
        raise InvalidArgumentError(f"mode 0 leaves the K={lattice.K} window within {n} steps")
    rows = []
    for m in UNIT_SHIFTS:
        moved = StateVector.from_grid(shift_labels(evolved.grid(), m), evolved.beta, lattice)
        for step in range(1, n + 1):
            moved, _ = op.apply_adjoint(moved, step)
        rows.append(_single_label(moved.amplitudes, lattice))
    return np.array(rows, dtype=float)


def check_heisenberg_relations(op: FloquetOp, steps: int = 2, tol: float = 1e-12) -> Dict[int, float]:
    """
    Assert U^dag^n p U^n = M^n p and U^dag^n x U^n = (M^-T)^n x for
    n = 1..steps; returns the max deviation of either map per n.
    """
    if op.model.variant != CAT_KICK:
        raise InvalidArgumentError("Heisenberg relations are checked for cat kicks only")
    M = op.model.matrix
    M_inv_T = np.rint(np.linalg.inv(M).T).astype(np.int64)
    deviations = {}
    for n in range(1, steps + 1):
        expected = np.linalg.matrix_power(M, n)
        measured = extract_momentum_map(op, n)
        deviation = float(np.max(np.abs(measured - expected)))
        if deviation > tol:
            raise HeisenbergRelationError(
                f"U^dag^{n} p U^{n} gives {np.round(measured, 6).tolist()}, "
                f"expected M^{n} = {expected.tolist()} (orientation {op.orientation})"
            )
        expected_x = np.linalg.matrix_power(M_inv_T, n)
        measured_x = extract_position_map(op, n)
        deviation_x = float(np.max(np.abs(measured_x - expected_x)))
        if deviation_x > tol:
            raise HeisenbergRelationError(
                f"U^dag^{n} x U^{n} gives {measured_x.astype(int).tolist()}, "
                f"expected (M^-T)^{n} = {expected_x.tolist()} (orientation {op.orientation})"
            )
        deviations[n] = max(deviation, deviation_x)
    logger.debug(f"Heisenberg relations hold up to n={steps}")
    return deviations
