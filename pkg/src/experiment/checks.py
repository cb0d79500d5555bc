"""
Invariant suite behind the `check` subcommand.

Each check builds small operators (K = 8 by default) and compares two
independent routes to the same number.
"""

import logging
import os
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from src import __version__
from src.analysis.cat_oracle import CatOracle, cat_oracle_power
from src.analysis.spectral import build_kernel, characteristic_probe, reconstruction_errors
from src.dynamics.floquet import ABSORBING, PERIODIC, FloquetOp, build_floquet, check_heisenberg_relations
from src.dynamics.kicks import KickModel
from src.experiment.runner import SCHEMA_VERSION, write_json
from src.perturbation.rho_zero import PerturbationSpec, build_rho0, normalize_traces, trace_pair
from src.torus.lattice import LatticeSpec, StateVector, reduce_momentum
from src.torus.observables import KINDS, ObservableMatrix
from src.utils.errors import LyapunovError

try:
    from config import CHECK_CONFIG
except ImportError:
    CHECK_CONFIG = {'K': 8, 'random_vectors': 10, 'seed': 1234}

logger = logging.getLogger(__name__)

UNITARITY_TOL = 1e-12
HERMITICITY_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-8
CHARACTERISTIC_TOL = 1e-5
LINEARITY_TOL = 1e-12
CONSTANCY_TOL = 1e-10
GENERIC_BETA = (0.3, 0.7)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: Optional[float]
    tolerance: Optional[float]
    detail: str = ''

    def to_dict(self) -> Dict:
        return asdict(self)


def _operators(K: int) -> Dict[str, FloquetOp]:
    lattice = LatticeSpec(K)
    generic = reduce_momentum(GENERIC_BETA)
    origin = reduce_momentum((0.0, 0.0))
    return {
        'free': build_floquet(KickModel.free(tau=1.0), lattice, generic, PERIODIC),
        'position_kick': build_floquet(KickModel.position_kick(1.0, tau=1.0), lattice, generic, PERIODIC),
        'cat_kick': build_floquet(KickModel.cat_kick(), lattice, origin, PERIODIC),
    }


def _rho_for(name: str, op: FloquetOp):
    p0 = op.sector.p0
    if name == 'cat_kick':
        spec = PerturbationSpec(q0=(np.pi / 4, 0.0), p0=tuple(p0), v1=(1.0, 0.0), k_window=1)
    else:
        spec = PerturbationSpec(q0=(0.4, -0.2), p0=tuple(p0), v1=(1.0, 0.5), v2=(0.5, 0.3), k_window=2, fd_step=1e-3)
    return build_rho0(spec, op.lattice)


def check_unitarity(ops: Dict[str, FloquetOp], vectors: int, rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for op in ops.values():
        d = op.lattice.d
        amplitudes = rng.standard_normal((d, vectors)) + 1j * rng.standard_normal((d, vectors))
        amplitudes /= np.linalg.norm(amplitudes, axis=0)
        v = StateVector(amplitudes, op.sector.beta, op.lattice)
        forward, _ = op.apply(v)
        back, _ = op.apply_adjoint(forward)
        worst = max(worst, float(np.max(np.abs(forward.column_norms_sq() - 1.0))))
        worst = max(worst, float(np.max(np.abs(back.amplitudes - amplitudes))))
    return CheckResult('unitarity', worst <= UNITARITY_TOL, worst, UNITARITY_TOL,
                       f"{len(ops)} operators, {vectors} random vectors each")


def check_hermiticity(K: int) -> CheckResult:
    lattice = LatticeSpec(K)
    worst = 0.0
    for kind in KINDS:
        A = ObservableMatrix(kind, lattice).dense(GENERIC_BETA)
        worst = max(worst, float(np.max(np.abs(A - A.conj().T))))
    return CheckResult('observable-hermiticity', worst <= HERMITICITY_TOL, worst, HERMITICITY_TOL,
                       "x1, x2, p1, p2 in the sector beta=(0.3, 0.7)")


def check_cat_closed_form(n_max: int = 30) -> CheckResult:
    oracle = CatOracle()
    mismatch = max(oracle.max_rounding_mismatch(n_max, cat_oracle_power), oracle.max_rounding_mismatch(n_max))
    return CheckResult('cat-closed-form', mismatch == 0, float(mismatch), 0.0,
                       f"rounded closed forms against exact integer powers, 0 <= n <= {n_max}")


def check_heisenberg(K: int, corrupt_cat_orientation: Optional[str] = None) -> CheckResult:
    lattice = LatticeSpec(K)
    model = KickModel.cat_kick(orientation=corrupt_cat_orientation)
    op = build_floquet(model, lattice, reduce_momentum((0.0, 0.0)), ABSORBING)
    deviations = check_heisenberg_relations(op, steps=2)
    worst = max(deviations.values())
    return CheckResult('heisenberg-relation', True, worst, UNITARITY_TOL,
                       f"p -> M^n p and x -> (M^-T)^n x for n <= 2, orientation {op.orientation}")


def check_spectral_reconstruction(ops: Dict[str, FloquetOp], n_max: int = 20) -> CheckResult:
    worst = 0.0
    for name in ('free', 'position_kick'):
        op = ops[name]
        rho = _rho_for(name, op)
        kernel = build_kernel(op, rho)
        worst = max(worst, float(np.max(reconstruction_errors(kernel, op, rho, n_max))))
    return CheckResult('spectral-reconstruction', worst < RECONSTRUCTION_TOL, worst, RECONSTRUCTION_TOL,
                       f"free and position kick, n <= {n_max}")


def check_characteristic(ops: Dict[str, FloquetOp], steps=(0, 1, 5)) -> CheckResult:
    worst = 0.0
    for name, op in ops.items():
        probe = characteristic_probe(op, _rho_for(name, op), steps)
        worst = max(worst, probe.max_discrepancy)
    return CheckResult('characteristic-gradient', worst < CHARACTERISTIC_TOL, worst, CHARACTERISTIC_TOL,
                       f"-i grad G(0, 0) against direct traces at n in {list(steps)}")


def check_linearity(ops: Dict[str, FloquetOp], n: int = 3) -> CheckResult:
    worst = 0.0
    for name in ('free', 'position_kick'):
        op = ops[name]
        p0 = tuple(op.sector.p0)

        def traces(v1, v2) -> np.ndarray:
            spec = PerturbationSpec(q0=(0.4, -0.2), p0=p0, v1=v1, v2=v2, k_window=2, fd_step=1e-3)
            return trace_pair(build_rho0(spec, op.lattice), op, n).values

        a = traces((1.0, 0.5), (0.0, 0.0))
        b = traces((0.0, 0.0), (0.5, 0.3))
        ab = traces((1.0, 0.5), (0.5, 0.3))
        scale = max(float(np.max(np.abs(ab))), 1.0)
        worst = max(worst, float(np.max(np.abs(ab - a - b))) / scale)
    return CheckResult('trace-linearity', worst <= LINEARITY_TOL, worst, LINEARITY_TOL,
                       f"traces of (v1, v2) against (v1, 0) + (0, v2) at n={n}")


def check_free_resonant(K: int, N: int = 20) -> CheckResult:
    lattice = LatticeSpec(K)
    sector = reduce_momentum((0.0, 0.0))
    op = build_floquet(KickModel.free(), lattice, sector)
    rho = build_rho0(PerturbationSpec(q0=(0.3, 0.1), v1=(1.0, 0.0)), lattice)
    values = np.array([trace_pair(rho, op, n).values for n in (0, N)])
    normalized, _ = normalize_traces(values[0], values)
    ratio = np.linalg.norm(normalized[1]) / np.linalg.norm(normalized[0])
    deviation = float(abs(ratio - 1.0))
    return CheckResult('free-resonant-constancy', deviation <= CONSTANCY_TOL, deviation, CONSTANCY_TOL,
                       f"Delta({N}) / Delta(0) at tau = 4 pi")


def run_checks(
    K: Optional[int] = None,
    random_vectors: Optional[int] = None,
    seed: Optional[int] = None,
    corrupt_cat_orientation: Optional[str] = None,
) -> List[CheckResult]:
    """Run every invariant check; a check that raises is recorded as failed"""
    K = CHECK_CONFIG['K'] if K is None else K
    random_vectors = CHECK_CONFIG['random_vectors'] if random_vectors is None else random_vectors
    seed = CHECK_CONFIG['seed'] if seed is None else seed
    rng = np.random.default_rng(seed)

    ops = _operators(K)
    suite: List[Tuple[str, Callable[[], CheckResult]]] = [
        ('unitarity', lambda: check_unitarity(ops, random_vectors, rng)),
        ('observable-hermiticity', lambda: check_hermiticity(K)),
        ('cat-closed-form', check_cat_closed_form),
        ('heisenberg-relation', lambda: check_heisenberg(K, corrupt_cat_orientation)),
        ('spectral-reconstruction', lambda: check_spectral_reconstruction(ops)),
        ('characteristic-gradient', lambda: check_characteristic(ops)),
        ('trace-linearity', lambda: check_linearity(ops)),
        ('free-resonant-constancy', lambda: check_free_resonant(K)),
    ]

    results = []
    for name, check in suite:
        try:
            result = check()
        except LyapunovError as e:
            logger.error(f"Check {name} raised {type(e).__name__}: {e}")
            result = CheckResult(name, False, None, None, f"{type(e).__name__}: {e}")
        except Exception as e:
            logger.exception(f"Check {name} crashed: {e}")
            result = CheckResult(name, False, None, None, f"{type(e).__name__}: {e}")
        level = logging.INFO if result.passed else logging.ERROR
        logger.log(level, f"Check {name}: {'PASS' if result.passed else 'FAIL'} ({result.value})")
        results.append(result)
    return results


def print_check_table(results: List[CheckResult]):
    print("\n" + "=" * 60)
    print("INVARIANT CHECKS")
    print("=" * 60)
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        value = "-" if result.value is None else f"{result.value:.3g}"
        print(f"  {result.name:<26} {status:<5} {value:>10}  {result.detail}")
    print("=" * 60)
    failed = sum(not result.passed for result in results)
    print(f"  {len(results) - failed}/{len(results)} checks passed")


def write_checks(out_dir: str, results: List[CheckResult], seed: int) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return write_json(os.path.join(out_dir, 'checks.json'), {
        'schema_version': SCHEMA_VERSION,
        'seed': seed,
        'passed': all(result.passed for result in results),
        'checks': [result.to_dict() for result in results],
        'software_version': __version__,
    })
