"""
Delta(n) series, growth-law fits and the sensitive-dependence verdict
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.dynamics.floquet import ABSORBING, FloquetOp, build_floquet
from src.dynamics.kicks import KickModel
from src.perturbation.rho_zero import (
    PerturbationSpec,
    RhoZero,
    TraceEvaluator,
    build_rho0,
    normalize_traces,
)
from src.torus.lattice import BlochSector, LatticeSpec
from src.utils.errors import InsufficientDataError, InvalidArgumentError

logger = logging.getLogger(__name__)

BOUNDED = "bounded"
POLYNOMIAL = "polynomial"
EXPONENTIAL = "exponential"

EXPONENTIAL_RATE_THRESHOLD = 0.1
POLYNOMIAL_DEGREE_THRESHOLD = 0.5
LOG_FLOOR = 1e-14
DEFAULT_LEAKAGE_BUDGET = 1e-6
MIN_FIT_POINTS = 3


@dataclass
class TraceSeries:
    """Stroboscopic record of normalized traces and Delta(n)"""

    steps: np.ndarray
    delta: np.ndarray
    leakage: np.ndarray
    traces: Optional[np.ndarray] = None
    raw: Optional[np.ndarray] = None
    fallback: Optional[np.ndarray] = None
    params: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.steps = np.asarray(self.steps, dtype=int)
        self.delta = np.asarray(self.delta, dtype=float)
        self.leakage = np.asarray(self.leakage, dtype=float)
        if not (len(self.steps) == len(self.delta) == len(self.leakage)):
            raise InvalidArgumentError("steps, delta and leakage must have equal length")

    @classmethod
    def synthetic(
        cls,
        delta: Sequence[float],
        steps: Optional[Sequence[int]] = None,
        leakage: Optional[Sequence[float]] = None,
    ) -> "TraceSeries":
        """Series from a bare Delta array, for fitting experiments"""
        delta = np.asarray(delta, dtype=float)
        steps = np.arange(len(delta)) if steps is None else np.asarray(steps)
        leakage = np.zeros(len(delta)) if leakage is None else np.asarray(leakage)
        return cls(steps=steps, delta=delta, leakage=leakage, params={"source": "synthetic"})

    @property
    def N(self) -> int:
        return int(self.steps[-1])


@dataclass
class GrowthReport:
    """Fitted rates, verdict and truncation diagnostics"""

    lambda_hat: float
    lambda_r2: float
    lambda_semilog: float
    lambda_semilog_r2: float
    degree_hat: float
    degree_r2: float
    verdict: str
    sensitive_dependent: bool
    fit_window: Tuple[int, int]
    n_points: int
    rate_method: str
    leakage_at_hi: float
    leakage_budget: float
    tau: Optional[float] = None
    lambda_per_time: Optional[float] = None
    truncation: Optional[Dict] = None

    def to_dict(self) -> Dict:
        report = asdict(self)
        report["fit_window"] = list(self.fit_window)
        report["thresholds"] = {
            "exponential_rate": EXPONENTIAL_RATE_THRESHOLD,
            "polynomial_degree": POLYNOMIAL_DEGREE_THRESHOLD,
        }
        return report


def run_series_with(op: FloquetOp, rho: RhoZero, N: int, h: Optional[float] = None) -> TraceSeries:
    """Delta(n) for n = 0..N from a prepared operator and perturbation"""
    if N < 2:
        raise InvalidArgumentError(f"series needs N >= 2 steps, got {N}")
    pairs = list(TraceEvaluator(rho, op, h).run(N))
    raw = np.array([pair.values for pair in pairs])
    traces, fallback = normalize_traces(raw[0], raw)
    if fallback.any():
        logger.warning(
            f"t=0 trace components {np.flatnonzero(fallback).tolist()} vanish; "
            f"normalizing them by the full t=0 norm"
        )
    delta = np.linalg.norm(traces, axis=1)
    leakage = np.maximum.accumulate(np.array([pair.leakage for pair in pairs]))
    params = {
        "variant": op.model.variant,
        "tau": op.model.tau,
        "K": op.lattice.K,
        "boundary": op.boundary,
        "h": rho.spec.fd_step if h is None else h,
        "k_window": int(np.max(np.abs(rho.k))) if rho.size else 0,
    }
    logger.info(f"Series finished: N={N}, Delta(N)/Delta(0)={delta[-1] / delta[0]:.6g}, leakage={leakage[-1]:.3g}")
    return TraceSeries(
        steps=np.arange(N + 1),
        delta=delta,
        leakage=leakage,
        traces=traces,
        raw=raw,
        fallback=fallback,
        params=params,
    )


def run_series(
    model: KickModel,
    lattice: LatticeSpec,
    sector: BlochSector,
    spec: PerturbationSpec,
    N: int,
    h: Optional[float] = None,
    boundary: str = ABSORBING,
) -> TraceSeries:
    """Build U_F and rho_0, then record Delta(n) for n = 0..N"""
    op = build_floquet(model, lattice, sector, boundary)
    rho = build_rho0(spec, lattice)
    return run_series_with(op, rho, N, h)


def _r_squared(y: np.ndarray, fitted: np.ndarray) -> float:
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    ss_res = float(np.sum((y - fitted) ** 2))
    if ss_tot == 0.0:
        return 1.0
    return 1.0 - ss_res / ss_tot


def _line_fit(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[1]), _r_squared(y, A @ coef)


def fit_growth(
    series: TraceSeries,
    leakage_budget: float = DEFAULT_LEAKAGE_BUDGET,
    window: Optional[Tuple[int, int]] = None,
    tau: Optional[float] = None,
) -> GrowthReport:
    """
    Fit log Delta against n and log n inside the leakage-budget prefix.

    lambda_hat comes from log Delta = a + lambda n + d log n over n >= 1
    when four or more such points exist, otherwise from the semilog slope.
    degree_hat is the log-log slope over n >= 1.
    """
    steps, delta, leakage = series.steps, series.delta, series.leakage
    within_budget = np.logical_and.accumulate(leakage <= leakage_budget)
    in_window = within_budget.copy()
    if window is not None:
        lo, hi = window
        in_window &= (steps >= lo) & (steps <= hi)
    usable = in_window & (delta >= LOG_FLOOR)

    if usable.sum() < MIN_FIT_POINTS:
        leakage_limited = not within_budget.all()
        raise InsufficientDataError(
            f"only {int(usable.sum())} usable points (need {MIN_FIT_POINTS}) "
            f"with leakage <= {leakage_budget}",
            leakage_profile=leakage.tolist(),
            leakage_limited=leakage_limited,
        )

    n = steps[usable].astype(float)
    y = np.log(delta[usable])
    lambda_semilog, semilog_r2 = _line_fit(n, y)

    positive = n >= 1
    if positive.sum() >= 2:
        degree_hat, degree_r2 = _line_fit(np.log(n[positive]), y[positive])
    else:
        degree_hat, degree_r2 = 0.0, 0.0

    if positive.sum() >= 4:
        A = np.column_stack([np.ones(positive.sum()), n[positive], np.log(n[positive])])
        coef, *_ = np.linalg.lstsq(A, y[positive], rcond=None)
        lambda_hat, lambda_r2, method = float(coef[1]), _r_squared(y[positive], A @ coef), "joint"
    else:
        lambda_hat, lambda_r2, method = lambda_semilog, semilog_r2, "semilog"

    if lambda_hat > EXPONENTIAL_RATE_THRESHOLD and lambda_r2 >= degree_r2:
        verdict = EXPONENTIAL
    elif degree_hat > POLYNOMIAL_DEGREE_THRESHOLD:
        verdict = POLYNOMIAL
    else:
        verdict = BOUNDED

    fit_steps = steps[usable]
    hi_index = int(np.flatnonzero(usable)[-1])
    tau = tau if tau is not None else series.params.get("tau")
    report = GrowthReport(
        lambda_hat=lambda_hat,
        lambda_r2=lambda_r2,
        lambda_semilog=lambda_semilog,
        lambda_semilog_r2=semilog_r2,
        degree_hat=degree_hat,
        degree_r2=degree_r2,
        verdict=verdict,
        sensitive_dependent=verdict != BOUNDED,
        fit_window=(int(fit_steps[0]), int(fit_steps[-1])),
        n_points=int(usable.sum()),
        rate_method=method,
        leakage_at_hi=float(leakage[hi_index]),
        leakage_budget=leakage_budget,
        tau=tau,
        lambda_per_time=lambda_hat / tau if tau else None,
    )
    logger.info(
        f"Growth fit: verdict={verdict}, lambda={lambda_hat:.6g} ({method}), "
        f"degree={degree_hat:.4g}, window={report.fit_window}"
    )
    return report


@dataclass
class SensitivityWitness:
    """Finite-horizon check of max_{T < n <= N} Delta(n)/Delta(0) > M"""

    thresholds: List[float]
    horizon: int
    N: int
    results: List[bool]
    max_ratio: float
    label: str = "finite-horizon witness; unboundedness itself is not decidable from finite data"

    def to_dict(self) -> Dict:
        return asdict(self)


def sensitivity_probe(series: TraceSeries, thresholds: Sequence[float], horizon: int) -> SensitivityWitness:
    """For each M, whether some n in (horizon, N] has Delta(n)/Delta(0) > M"""
    if len(series.delta) == 0:
        raise InvalidArgumentError("sensitivity probe needs a nonempty series")
    ratios = series.delta / series.delta[0]
    later = ratios[series.steps > horizon]
    peak = float(np.max(later)) if later.size else float("-inf")
    return SensitivityWitness(
        thresholds=[float(M) for M in thresholds],
        horizon=int(horizon),
        N=series.N,
        results=[bool(peak > M) for M in thresholds],
        max_ratio=peak,
    )


def truncation_probe(
    model: KickModel,
    lattice: LatticeSpec,
    sector: BlochSector,
    spec: PerturbationSpec,
    N: int,
    h: Optional[float] = None,
    boundary: str = ABSORBING,
    leakage_budget: float = DEFAULT_LEAKAGE_BUDGET,
) -> Dict:
    """Rerun at cutoff 2K; compare Delta over the base fit window and the rates"""
    if spec.k_window is None:
        spec = replace(spec, k_window=lattice.K // 2)
    base = run_series(model, lattice, sector, spec, N, h, boundary)
    doubled = run_series(model, LatticeSpec(2 * lattice.K), sector, spec, N, h, boundary)
    base_report = fit_growth(base, leakage_budget)
    doubled_report = fit_growth(doubled, leakage_budget, window=base_report.fit_window)
    lo, hi = base_report.fit_window
    mask = (base.steps >= lo) & (base.steps <= hi)
    change = np.abs(doubled.delta[mask] - base.delta[mask]) / np.abs(base.delta[mask])
    rate_change = abs(doubled_report.lambda_hat - base_report.lambda_hat)
    relative_rate_change = rate_change / abs(base_report.lambda_hat) if base_report.lambda_hat else rate_change
    return {
        "K": lattice.K,
        "K_probe": 2 * lattice.K,
        "window": [lo, hi],
        "max_relative_delta_change": float(np.max(change)),
        "lambda_hat": base_report.lambda_hat,
        "lambda_hat_probe": doubled_report.lambda_hat,
        "relative_rate_change": float(relative_rate_change),
    }
