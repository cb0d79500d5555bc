"""
Singular initial perturbation rho_0 and its trace pairing with
Heisenberg-evolved position and momentum observables.

rho_0 = -2 (v1 . d/dq0 + v2 . d/dp0) sum_k |p0 - k> e^{i 2k.q0} <p0 + k|

The q0 derivative is taken analytically (a factor i 2k per dyad). The p0
derivative is a symmetric finite difference in the Bloch parameter beta,
so a trace with v2 != 0 is a weighted sum over "branches", each branch
being the same dyad family evaluated in a shifted sector.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.dynamics.floquet import FloquetOp
from src.torus.lattice import BlochSector, LatticeSpec, StateVector, reduce_momentum
from src.torus.observables import KINDS, ObservableMatrix, apply_observable
from src.utils.errors import DegeneratePerturbationError, InvalidArgumentError

logger = logging.getLogger(__name__)

DEFAULT_FD_STEP = 1e-4
FD_SCHEMES = ("central", "richardson")
ZERO_COMPONENT_TOL = 1e-12


def _vector(name: str, value: Sequence[float]) -> Tuple[float, float]:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (2,) or not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} must be a finite real 2-vector, got {value!r}")
    return float(arr[0]), float(arr[1])


@dataclass(frozen=True)
class PerturbationSpec:
    """Reference point (q0, p0), direction (v1, v2) and dyad cutoff"""

    q0: Tuple[float, float] = (0.0, 0.0)
    p0: Tuple[float, float] = (0.0, 0.0)
    v1: Tuple[float, float] = (1.0, 0.0)
    v2: Tuple[float, float] = (0.0, 0.0)
    k_window: Optional[int] = None
    fd_step: float = DEFAULT_FD_STEP
    fd_scheme: str = "central"

    def __post_init__(self):
        for name in ("q0", "p0", "v1", "v2"):
            object.__setattr__(self, name, _vector(name, getattr(self, name)))
        if not any(self.v1) and not any(self.v2):
            raise InvalidArgumentError("perturbation direction (v1, v2) must be nonzero")
        if self.k_window is not None and int(self.k_window) < 0:
            raise InvalidArgumentError(f"k_window must be >= 0, got {self.k_window}")
        if not np.isfinite(self.fd_step) or self.fd_step < 0:
            raise InvalidArgumentError(f"fd_step must be a finite non-negative number, got {self.fd_step}")
        if self.fd_scheme not in FD_SCHEMES:
            raise InvalidArgumentError(f"fd_scheme must be one of {FD_SCHEMES}, got {self.fd_scheme!r}")

    @property
    def direction_norm(self) -> float:
        return float(np.linalg.norm(np.concatenate([self.v1, self.v2])))

    @property
    def has_momentum_part(self) -> bool:
        return any(self.v2)


@dataclass(frozen=True)
class Branch:
    """Dyad weights evaluated in the sector beta + shift"""

    shift: Tuple[float, float]
    weights: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class RhoZero:
    """Dyads |n0 - k><n0 + k| with base phases e^{i 2k.q0}"""

    spec: PerturbationSpec
    lattice: LatticeSpec
    sector: BlochSector
    k: np.ndarray = field(repr=False)
    bra: np.ndarray = field(repr=False)
    ket: np.ndarray = field(repr=False)
    base_phase: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.bra)

    @property
    def analytic_weights(self) -> np.ndarray:
        """-2 (i 2k.v1) e^{i 2k.q0}"""
        return -4j * (self.k @ np.array(self.spec.v1)) * self.base_phase

    def branches(self, h: Optional[float] = None, scheme: Optional[str] = None) -> List[Branch]:
        """Weighted sectors whose summed traces give Tr{rho_0 O}"""
        h = self.spec.fd_step if h is None else h
        scheme = scheme or self.spec.fd_scheme
        result = []
        if any(self.spec.v1):
            result.append(Branch((0.0, 0.0), self.analytic_weights))
        if not self.spec.has_momentum_part:
            return result
        if not h or h <= 0:
            raise InvalidArgumentError(f"finite-difference step must be > 0 when v2 != 0, got {h}")
        if scheme == "richardson":
            stencil = [(h / 2.0, 4.0 / 3.0), (h, -1.0 / 3.0)]
        else:
            stencil = [(h, 1.0)]
        for axis, v2 in enumerate(self.spec.v2):
            if v2 == 0:
                continue
            for step, factor in stencil:
                # -2 v2 d/dp0 with (f(+s) - f(-s)) / 2s
                weight = -factor * v2 / step * self.base_phase
                shift = np.zeros(2)
                shift[axis] = step
                result.append(Branch((shift[0], shift[1]), weight))
                result.append(Branch((-shift[0], -shift[1]), -weight))
        return result

    def dense(self, weights: np.ndarray) -> np.ndarray:
        """sum_k w_k |ket_k><bra_k| as a d x d matrix"""
        R = np.zeros((self.lattice.d, self.lattice.d), dtype=complex)
        np.add.at(R, (self.ket, self.bra), weights)
        return R


def build_rho0(spec: PerturbationSpec, lattice: LatticeSpec) -> RhoZero:
    """Dyad family for |k_i| <= k_window with both n0 +- k inside the window"""
    sector = reduce_momentum(spec.p0)
    k_window = lattice.K // 2 if spec.k_window is None else int(spec.k_window)
    if k_window > lattice.K:
        raise InvalidArgumentError(f"k_window={k_window} exceeds lattice cutoff K={lattice.K}")

    n0 = np.array(sector.integer_part)
    axis = np.arange(-k_window, k_window + 1)
    k1, k2 = np.meshgrid(axis, axis, indexing="ij")
    k = np.stack([k1.ravel(), k2.ravel()], axis=1)
    bra_labels = n0 + k
    ket_labels = n0 - k
    inside = np.all(np.abs(bra_labels) <= lattice.K, axis=1) & np.all(np.abs(ket_labels) <= lattice.K, axis=1)
    if not inside.any():
        raise InvalidArgumentError(
            f"no dyad fits: p0={spec.p0} with k_window={k_window} leaves the K={lattice.K} window"
        )
    k = k[inside]
    K, n = lattice.K, lattice.n
    bra = (bra_labels[inside, 0] + K) * n + (bra_labels[inside, 1] + K)
    ket = (ket_labels[inside, 0] + K) * n + (ket_labels[inside, 1] + K)
    base_phase = np.exp(2j * (k @ np.array(spec.q0)))

    logger.debug(f"rho_0 with {len(k)} of {len(axis) ** 2} dyads (k_window={k_window})")
    return RhoZero(spec=spec, lattice=lattice, sector=sector, k=k, bra=bra, ket=ket, base_phase=base_phase)


@dataclass(frozen=True)
class TracePair:
    """(Tr rho x1_H, Tr rho x2_H, Tr rho p1_H, Tr rho p2_H) at step n"""

    n: int
    values: np.ndarray
    leakage: float


class TraceEvaluator:
    """
    Evolves the dyad columns of every branch step by step and pairs them
    with the observables. Bra and ket labels share one column set, so each
    distinct basis vector is evolved once per branch.
    """

    def __init__(
        self,
        rho: RhoZero,
        op: FloquetOp,
        h: Optional[float] = None,
        kinds: Sequence[str] = KINDS,
    ):
        if op.lattice != rho.lattice:
            raise InvalidArgumentError(f"rho_0 on K={rho.lattice.K} paired with operator on K={op.lattice.K}")
        if op.sector != rho.sector:
            raise InvalidArgumentError(
                f"rho_0 sector {rho.sector} differs from operator sector {op.sector}"
            )
        unknown = set(kinds) - set(KINDS)
        if unknown:
            raise InvalidArgumentError(f"unknown observable kinds {sorted(unknown)}")
        self.rho = rho
        self.op = op
        self.kinds = tuple(kinds)
        self.branches = rho.branches(h)
        self.observables = {kind: ObservableMatrix(kind, rho.lattice) for kind in self.kinds}

        columns, inverse = np.unique(np.concatenate([rho.bra, rho.ket]), return_inverse=True)
        self.columns = columns
        self.bra_col = inverse[: rho.size]
        self.ket_col = inverse[rho.size:]

    def _initial_states(self) -> List[StateVector]:
        states = []
        amplitudes = np.zeros((self.rho.lattice.d, len(self.columns)), dtype=complex)
        amplitudes[self.columns, np.arange(len(self.columns))] = 1.0
        for branch in self.branches:
            sector = self.rho.sector.shifted(branch.shift)
            states.append(StateVector(amplitudes.copy(), sector.beta, self.rho.lattice))
        return states

    def pair_states(self, states: List[StateVector]) -> np.ndarray:
        values = np.full(len(KINDS), np.nan, dtype=complex)
        for slot, kind in enumerate(KINDS):
            if kind not in self.observables:
                continue
            total = 0j
            for branch, state in zip(self.branches, states):
                pushed = apply_observable(self.observables[kind], state).amplitudes
                bras = state.amplitudes[:, self.bra_col]
                kets = pushed[:, self.ket_col]
                total += complex(np.dot(branch.weights, np.einsum("ij,ij->j", bras.conj(), kets)))
            values[slot] = total
        return values

    def run(self, steps: int) -> Iterator[TracePair]:
        """Yield the trace vector for n = 0..steps"""
        if steps < 0:
            raise InvalidArgumentError(f"step count must be >= 0, got {steps}")
        states = self._initial_states()
        leakage = 0.0
        yield TracePair(0, self.pair_states(states), leakage)
        for n in range(1, steps + 1):
            states = [self.op.apply(state, n)[0] for state in states]
            for state in states:
                # worst single column: one leaking dyad already spoils the trace
                lost = 1.0 - float(np.min(state.column_norms_sq()))
                leakage = max(leakage, min(max(lost, 0.0), 1.0))
            yield TracePair(n, self.pair_states(states), leakage)

    def evolved_states(self, steps: int) -> List[StateVector]:
        states = self._initial_states()
        for _ in range(steps):
            states = [self.op.apply(state)[0] for state in states]
        return states


def trace_pair(
    rho: RhoZero,
    op: FloquetOp,
    n: int,
    fd_step: Optional[float] = None,
    kinds: Sequence[str] = KINDS,
) -> TracePair:
    """Traces of rho_0 against the four observables after n kicks"""
    pair = None
    for pair in TraceEvaluator(rho, op, fd_step, kinds).run(n):
        pass
    return pair


def normalize_traces(initial: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Componentwise ratio to the t=0 traces. Components whose t=0 value
    vanishes are divided by the norm of the whole t=0 vector instead.
    Returns (normalized, fallback mask).
    """
    scale = float(np.linalg.norm(initial))
    if scale == 0.0 or not np.isfinite(scale):
        raise DegeneratePerturbationError("t=0 trace vector vanishes; the perturbation is degenerate")
    fallback = np.abs(initial) <= ZERO_COMPONENT_TOL * max(1.0, scale)
    denominators = np.where(fallback, scale, initial)
    return values / denominators, fallback


def normalized_trace(rho: RhoZero, op: FloquetOp, n: int, fd_step: Optional[float] = None) -> np.ndarray:
    """Tr'{rho_0 O_H(n)} for the four observables"""
    pairs = list(TraceEvaluator(rho, op, fd_step).run(n))
    normalized, fallback = normalize_traces(pairs[0].values, pairs[-1].values)
    if fallback.any():
        logger.debug(f"Normalization fallback on components {np.flatnonzero(fallback).tolist()}")
    return normalized


def fd_convergence(rho: RhoZero, op: FloquetOp, n: int, h: float) -> float:
    """
    Ratio |D(h) - D(h/2)| / |D(h/2) - D(h/4)| of central-difference traces,
    taken on the component that moves most between h and h/2; about 4 for a
    second-order difference.
    """
    if not rho.spec.has_momentum_part:
        raise InvalidArgumentError("finite-difference convergence needs a momentum part v2 != 0")
    rho = replace(rho, spec=replace(rho.spec, fd_scheme="central"))
    values = [trace_pair(rho, op, n, fd_step=step).values for step in (h, h / 2.0, h / 4.0)]
    coarse = np.abs(values[0] - values[1])
    slot = int(np.argmax(coarse))
    fine = abs(values[1][slot] - values[2][slot])
    if fine == 0.0:
        return float("inf")
    return float(coarse[slot] / fine)
