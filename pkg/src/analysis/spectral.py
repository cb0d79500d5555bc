"""
Spectral view of the truncated Floquet operator.

Traces are rebuilt from the eigenbasis as
    Tr{rho_0 O_H(n)} = sum_{mu,nu} rho~_{mu nu} O~_{nu mu} l_mu^n conj(l_nu)^n
with rho~ = Z^dag R Z, O~ = Z^dag O Z and l the Floquet eigenvalues, so at
stroboscopic times the phase per step is the eigenphase itself.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import expm, schur

from src.dynamics.floquet import FloquetOp
from src.dynamics.kicks import CAT_KICK
from src.perturbation.rho_zero import RhoZero, TraceEvaluator
from src.torus.lattice import StateVector
from src.torus.observables import KINDS, ObservableMatrix
from src.utils.errors import InvalidArgumentError, SpectralDefectError, TooLargeError

logger = logging.getLogger(__name__)

DEFAULT_MAX_DIM = 4096
DEFAULT_DEFECT_TOL = 1e-8
CHARACTERISTIC_MAX_K = 8
STENCILS = ("central", "five_point")
PROFILE_LABEL = "qualitative kernel-concentration diagnostic, not a classifier"


@dataclass
class FloquetSpectrum:
    """Schur eigenpairs sorted by eigenphase in (-pi, pi]"""

    eigenvalues: np.ndarray
    eigenphases: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    defect: float
    beta: tuple

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.eigenvalues)


def _closed_sector(op: FloquetOp) -> bool:
    if op.model.variant != CAT_KICK:
        return True
    S = op.kick_action.S.astype(float)
    image = S @ op.sector.beta_array
    return bool(np.allclose(image - np.floor(image), op.sector.beta_array, atol=0.0, rtol=0.0))


def diagonalize(op: FloquetOp, max_dim: int = DEFAULT_MAX_DIM) -> FloquetSpectrum:
    """Complex Schur decomposition of the dense Floquet matrix"""
    d = op.lattice.d
    if d > max_dim:
        raise TooLargeError(f"dense eigensolver capped at d={max_dim}, lattice has d={d}; use a smaller K")
    if not _closed_sector(op):
        raise InvalidArgumentError(
            f"cat kick moves sector beta={op.sector.beta} elsewhere; no spectrum within one sector"
        )

    U = op.dense()
    T, Z = schur(U, output="complex")
    eigenvalues = np.diag(T).copy()
    eigenphases = np.angle(eigenvalues)
    eigenphases[eigenphases <= -np.pi] += 2.0 * np.pi
    order = np.argsort(eigenphases, kind="stable")

    strict_upper = np.triu(T, k=1)
    orthogonality = Z.conj().T @ Z - np.eye(d)
    defect = float(max(np.max(np.abs(orthogonality)), np.max(np.abs(strict_upper))))
    logger.info(f"Diagonalized d={d}: defect={defect:.3g}, min |l|={np.min(np.abs(eigenvalues)):.12f}")
    return FloquetSpectrum(
        eigenvalues=eigenvalues[order],
        eigenphases=eigenphases[order],
        eigenvectors=Z[:, order],
        defect=defect,
        beta=op.sector.beta,
    )


@dataclass
class BranchKernel:
    """rho~ and O~ for one finite-difference branch"""

    spectrum: FloquetSpectrum
    rho_tilde: np.ndarray = field(repr=False)
    obs_tilde: Dict[str, np.ndarray] = field(repr=False)
    rho_frobenius_sq: float = 0.0


@dataclass
class SpectralKernel:
    """Kernels of every branch of rho_0"""

    branches: List[BranchKernel]

    @property
    def max_defect(self) -> float:
        return max(branch.spectrum.defect for branch in self.branches)


def build_kernel(
    op: FloquetOp,
    rho: RhoZero,
    h: Optional[float] = None,
    max_dim: int = DEFAULT_MAX_DIM,
) -> SpectralKernel:
    """Diagonalize U_F in each branch sector and rotate rho_0 and the observables"""
    branches = []
    for branch in rho.branches(h):
        sector = rho.sector.shifted(branch.shift)
        spectrum = diagonalize(op.with_sector(sector), max_dim)
        Z = spectrum.eigenvectors
        R = rho.dense(branch.weights)
        obs_tilde = {
            kind: Z.conj().T @ ObservableMatrix(kind, rho.lattice).dense(sector.beta) @ Z
            for kind in KINDS
        }
        branches.append(
            BranchKernel(
                spectrum=spectrum,
                rho_tilde=Z.conj().T @ R @ Z,
                obs_tilde=obs_tilde,
                rho_frobenius_sq=float(np.sum(np.abs(R) ** 2)),
            )
        )
    return SpectralKernel(branches)


def reconstruct_trace(kernel: SpectralKernel, n: int, defect_tol: float = DEFAULT_DEFECT_TOL) -> np.ndarray:
    """Traces after n kicks from the double eigen-sum"""
    if n < 0:
        raise InvalidArgumentError(f"step count must be >= 0, got {n}")
    if kernel.max_defect >= defect_tol:
        raise SpectralDefectError(
            f"eigenbasis defect {kernel.max_defect:.3g} exceeds {defect_tol:.1g}; refusing reconstruction",
            defect=kernel.max_defect,
        )
    values = np.zeros(len(KINDS), dtype=complex)
    for branch in kernel.branches:
        forward = branch.spectrum.eigenvalues ** n
        backward = np.conj(branch.spectrum.eigenvalues) ** n
        for slot, kind in enumerate(KINDS):
            values[slot] += np.einsum(
                "mn,nm,m,n->", branch.rho_tilde, branch.obs_tilde[kind], forward, backward
            )
    return values


def parseval_defect(kernel: SpectralKernel) -> float:
    """Largest relative gap between sum |rho~|^2 and ||R||_F^2 over branches"""
    worst = 0.0
    for branch in kernel.branches:
        rotated = float(np.sum(np.abs(branch.rho_tilde) ** 2))
        scale = max(branch.rho_frobenius_sq, 1e-300)
        worst = max(worst, abs(rotated - branch.rho_frobenius_sq) / scale)
    return worst


def reconstruction_errors(
    kernel: SpectralKernel,
    op: FloquetOp,
    rho: RhoZero,
    n_max: int,
    h: Optional[float] = None,
    defect_tol: float = DEFAULT_DEFECT_TOL,
) -> np.ndarray:
    """
    max_c |spectral_c - direct_c| / ||direct|| for n = 0..n_max, with the
    direct traces from step-by-step evolution of the same branches.
    """
    errors = []
    for pair in TraceEvaluator(rho, op, h).run(n_max):
        spectral = reconstruct_trace(kernel, pair.n, defect_tol)
        scale = float(np.linalg.norm(pair.values))
        error = float(np.max(np.abs(spectral - pair.values)))
        errors.append(error / scale if scale > 0 else error)
    return np.array(errors)


@dataclass
class CharacteristicRecord:
    """Gradient of G at the origin against the direct traces at one step"""

    n: int
    step: float
    stencil: str
    gradient_traces: List[complex]
    direct_traces: List[complex]
    discrepancy: float
    g_origin: complex

    def to_dict(self) -> Dict:
        record = asdict(self)
        for key in ("gradient_traces", "direct_traces"):
            record[key] = [[z.real, z.imag] for z in record[key]]
        record["g_origin"] = [self.g_origin.real, self.g_origin.imag]
        return record


@dataclass
class CharacteristicProbe:
    """G(mu, nu) gradients over several steps and the drift of G(0, 0)"""

    records: List[CharacteristicRecord]
    g_origin_drift: float

    @property
    def max_discrepancy(self) -> float:
        return max(record.discrepancy for record in self.records)

    def to_dict(self) -> Dict:
        return {
            "records": [record.to_dict() for record in self.records],
            "g_origin_drift": self.g_origin_drift,
            "max_discrepancy": self.max_discrepancy,
        }


def displacement_operator(generators: Sequence[np.ndarray], theta: Sequence[float]) -> np.ndarray:
    """exp(i sum_a theta_a G_a) for dense Hermitian generators"""
    total = sum(t * g for t, g in zip(theta, generators) if t != 0)
    if isinstance(total, int):
        return np.eye(generators[0].shape[0], dtype=complex)
    return expm(1j * total)


def _stencil(stencil: str, e: float):
    if stencil == "central":
        return [(e, 1.0 / (2 * e)), (-e, -1.0 / (2 * e))]
    return [
        (2 * e, -1.0 / (12 * e)),
        (e, 8.0 / (12 * e)),
        (-e, -8.0 / (12 * e)),
        (-2 * e, 1.0 / (12 * e)),
    ]


def characteristic_gradient_check(
    op: FloquetOp,
    rho: RhoZero,
    n: int,
    e: float = 1e-3,
    stencil: str = "five_point",
    h: Optional[float] = None,
) -> CharacteristicRecord:
    """
    Compare -i grad G(mu, nu) at the origin with the direct traces.

    G(mu, nu) = Tr{rho_t exp(i(mu.x + nu.p))} with the windowed generator
    exponentiated densely; the gradient is a finite difference of step e.
    """
    if e <= 0:
        raise InvalidArgumentError(f"stencil step must be > 0, got {e}")
    if stencil not in STENCILS:
        raise InvalidArgumentError(f"stencil must be one of {STENCILS}, got {stencil!r}")
    if op.lattice.K > CHARACTERISTIC_MAX_K:
        raise TooLargeError(
            f"dense displacement operators are limited to K <= {CHARACTERISTIC_MAX_K}, got K={op.lattice.K}"
        )

    evaluator = TraceEvaluator(rho, op, h)
    states: List[StateVector] = evaluator.evolved_states(n)
    direct = evaluator.pair_states(states)

    gradient = np.zeros(len(KINDS), dtype=complex)
    g_origin = 0j
    for branch, state in zip(evaluator.branches, states):
        generators = [ObservableMatrix(kind, rho.lattice).dense(state.beta) for kind in KINDS]
        bras = state.amplitudes[:, evaluator.bra_col]
        kets = state.amplitudes[:, evaluator.ket_col]

        def G(theta) -> complex:
            D = displacement_operator(generators, theta)
            return complex(np.dot(branch.weights, np.einsum("ij,ij->j", bras.conj(), D @ kets)))

        g_origin += complex(np.dot(branch.weights, np.einsum("ij,ij->j", bras.conj(), kets)))
        for axis in range(len(KINDS)):
            derivative = 0j
            for offset, coefficient in _stencil(stencil, e):
                theta = np.zeros(len(KINDS))
                theta[axis] = offset
                derivative += coefficient * G(theta)
            gradient[axis] += -1j * derivative

    scale = float(np.linalg.norm(direct))
    error = float(np.max(np.abs(gradient - direct)))
    discrepancy = error / scale if scale > 0 else error
    logger.debug(f"Characteristic check n={n}, e={e}, {stencil}: discrepancy={discrepancy:.3g}")
    return CharacteristicRecord(
        n=n,
        step=e,
        stencil=stencil,
        gradient_traces=[complex(z) for z in gradient],
        direct_traces=[complex(z) for z in direct],
        discrepancy=discrepancy,
        g_origin=g_origin,
    )


def characteristic_probe(
    op: FloquetOp,
    rho: RhoZero,
    steps: Sequence[int] = (0, 1, 5),
    e: float = 1e-3,
    stencil: str = "five_point",
    h: Optional[float] = None,
) -> CharacteristicProbe:
    records = [characteristic_gradient_check(op, rho, n, e, stencil, h) for n in steps]
    origins = np.array([record.g_origin for record in records])
    drift = float(np.max(np.abs(origins - origins[0]))) if len(origins) else 0.0
    return CharacteristicProbe(records=records, g_origin_drift=drift)


@dataclass
class KernelProfile:
    """Fraction of sum |K(mu, nu)| per bin of |E_mu - E_nu| on [0, pi]"""

    edges: np.ndarray
    fractions: np.ndarray
    total: float
    label: str = PROFILE_LABEL

    def mass_near_zero(self, bins: int = 2) -> float:
        return float(np.sum(self.fractions[:bins]))

    def occupied_bins(self, floor: float = 1e-3) -> int:
        return int(np.sum(self.fractions > floor))

    def to_dict(self) -> Dict:
        return {
            "label": self.label,
            "edges": self.edges.tolist(),
            "fractions": self.fractions.tolist(),
            "total": self.total,
        }


def kernel_profile(kernel: SpectralKernel, bins: int = 16) -> KernelProfile:
    """Histogram of |rho~_{mu nu} O~_{nu mu}| against wrapped eigenphase gaps"""
    if bins < 8:
        raise InvalidArgumentError(f"kernel profile needs at least 8 bins, got {bins}")
    edges = np.linspace(0.0, np.pi, bins + 1)
    mass = np.zeros(bins)
    for branch in kernel.branches:
        E = branch.spectrum.eigenphases
        gaps = np.abs(np.angle(np.exp(1j * (E[:, None] - E[None, :]))))
        weights = np.zeros_like(gaps)
        for kind in KINDS:
            weights += np.abs(branch.rho_tilde * branch.obs_tilde[kind].T)
        histogram, _ = np.histogram(gaps.ravel(), bins=edges, weights=weights.ravel())
        mass += histogram
    total = float(np.sum(mass))
    fractions = mass / total if total > 0 else mass
    return KernelProfile(edges=edges, fractions=fractions, total=total)
