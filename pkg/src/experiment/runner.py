"""
Experiment runner: single runs, parameter sweeps and spectral analyses.

Workers only compute; every file is written by the parent process in a
fixed order, so identical configs give byte-identical CSV and JSON.
"""

import json
import logging
import multiprocessing as mp
import os
import time
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src import __version__
from src.analysis.growth import (
    GrowthReport,
    SensitivityWitness,
    TraceSeries,
    fit_growth,
    run_series,
    sensitivity_probe,
    truncation_probe,
)
from src.analysis.spectral import (
    CHARACTERISTIC_MAX_K,
    build_kernel,
    characteristic_probe,
    kernel_profile,
    parseval_defect,
    reconstruction_errors,
)
from src.dynamics.floquet import build_floquet
from src.experiment.config_loader import ExperimentConfig
from src.perturbation.rho_zero import build_rho0
from src.utils.errors import (
    ConfigError,
    InsufficientDataError,
    InvalidArgumentError,
    LyapunovError,
    SpectralDefectError,
    TooLargeError,
)
from src.utils.metrics import compare_sweep_points, rate_spread, series_frame, summarize_sweep
from src.utils.visualizer import ResultVisualizer

try:
    from config import VISUALIZATION_CONFIG
except ImportError:
    VISUALIZATION_CONFIG = {'figure_size': (8, 5), 'palette': 'husl', 'svg_hashsalt': 'quantum-lyapunov'}

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FLOAT_FORMAT = '%.17g'

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_INSUFFICIENT_DATA = 3
EXIT_LEAKAGE = 4
EXIT_SPECTRAL = 5


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, (ConfigError, InvalidArgumentError)):
        return EXIT_INVALID
    if isinstance(error, InsufficientDataError):
        return EXIT_LEAKAGE if error.leakage_limited else EXIT_INSUFFICIENT_DATA
    if isinstance(error, (SpectralDefectError, TooLargeError)):
        return EXIT_SPECTRAL
    return EXIT_FAILURE


def error_payload(error: BaseException) -> Dict:
    payload = {
        'schema_version': SCHEMA_VERSION,
        'error_type': type(error).__name__,
        'message': str(error),
        'key_path': getattr(error, 'key_path', None),
        'exit_code': exit_code_for(error),
    }
    if isinstance(error, InsufficientDataError):
        payload['leakage_profile'] = error.leakage_profile
        payload['leakage_limited'] = error.leakage_limited
    if isinstance(error, SpectralDefectError):
        payload['defect'] = error.defect
    return payload


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def write_json(path: str, data: Dict) -> str:
    with open(path, 'w') as f_json:
        json.dump(_jsonable(data), f_json, indent=2, sort_keys=True)
        f_json.write('\n')
    return path


def write_error_report(out_dir: str, error: BaseException) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return write_json(os.path.join(out_dir, 'error.json'), error_payload(error))


@dataclass
class RunResult:
    """Everything a run computes, before any file is written"""

    series: TraceSeries
    report: GrowthReport
    sensitivity: SensitivityWitness
    wall_time: float


@dataclass
class RunSummary:
    """Config echo, fitted report and the files written for one run"""

    config: Dict
    config_hash: str
    report: Dict
    sensitivity: Dict
    artifacts: Dict[str, str]
    software_version: str = __version__
    wall_time: Optional[float] = None
    status: str = 'ok'
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> Dict:
        return {
            'schema_version': self.schema_version,
            'status': self.status,
            'config': self.config,
            'config_hash': self.config_hash,
            'report': self.report,
            'sensitivity': self.sensitivity,
            'artifacts': self.artifacts,
            'software_version': self.software_version,
            'wall_time': self.wall_time,
        }


def compute_run(config: ExperimentConfig) -> RunResult:
    """Build the model from a config, record Delta(n) and fit it"""
    start_time = time.perf_counter()
    model = config.build_model()
    lattice, sector = config.build_lattice()
    spec = config.build_perturbation()
    run = config.run

    series = run_series(model, lattice, sector, spec, run['N'], boundary=config.boundary)
    window = tuple(run['fit_window']) if run['fit_window'] is not None else None
    report = fit_growth(series, run['leakage_budget'], window=window, tau=model.tau)
    if run['truncation_probe']:
        report.truncation = truncation_probe(
            model, lattice, sector, spec, run['N'], boundary=config.boundary, leakage_budget=run['leakage_budget']
        )
    sensitivity = sensitivity_probe(series, run['thresholds'], run['horizon'])
    return RunResult(series=series, report=report, sensitivity=sensitivity,
                     wall_time=time.perf_counter() - start_time)


def _sweep_worker(payload) -> Dict:
    index, value, config = payload
    point = {'index': index, 'value': value, 'status': 'ok', 'config': None, 'result': None, 'error': None}
    try:
        point_config = config.with_override(config.sweep['parameter'], value)
        point['config'] = point_config
        point['result'] = compute_run(point_config)
    except LyapunovError as e:
        logger.warning(f"Sweep point {index} ({config.sweep['parameter']}={value!r}) failed: {e}")
        _mark_failed(point, e)
    except Exception as e:
        logger.exception(f"Sweep point {index} ({config.sweep['parameter']}={value!r}) crashed: {e}")
        _mark_failed(point, e)
    return point


def _mark_failed(point: Dict, error: BaseException):
    point['status'] = 'error'
    point['error'] = f"{type(error).__name__}: {error}"
    point['error_payload'] = error_payload(error)


class ExperimentRunner:
    """Runs one experiment config and writes its artifacts"""

    def __init__(
        self,
        config: ExperimentConfig,
        out_dir: Optional[str] = None,
        plot: Optional[bool] = None,
        workers: int = 1,
        log_file: Optional[str] = None,
    ):
        self.config = config
        self.out_dir = out_dir or config.output['dir']
        self.plot = config.output['plot'] if plot is None else plot
        self.workers = max(1, int(workers))
        self.log_file = log_file
        self.results: Dict = {}
        os.makedirs(self.out_dir, exist_ok=True)

    def _visualizer(self, out_dir: str) -> ResultVisualizer:
        return ResultVisualizer(
            output_dir=out_dir,
            figure_size=tuple(VISUALIZATION_CONFIG['figure_size']),
            palette=VISUALIZATION_CONFIG['palette'],
            hashsalt=VISUALIZATION_CONFIG['svg_hashsalt'],
        )

    # ------------------------------------------------------------ run

    def _with_log(self, artifacts: Dict[str, str], out_dir: str) -> Dict[str, str]:
        """List the CLI log file when it is written next to these artifacts"""
        if self.log_file and os.path.abspath(out_dir) == os.path.abspath(self.out_dir):
            artifacts['log'] = self.log_file
        return artifacts

    def write_run(self, out_dir: str, config: ExperimentConfig, result: RunResult) -> RunSummary:
        """Per-step CSV, optional SVG and the JSON summary referencing both"""
        os.makedirs(out_dir, exist_ok=True)
        artifacts = self._with_log({'series': 'series.csv'}, out_dir)
        series_frame(result.series).to_csv(
            os.path.join(out_dir, artifacts['series']), index=False, float_format=FLOAT_FORMAT
        )

        report = result.report.to_dict()
        if self.plot:
            artifacts['plot'] = 'delta.svg'
            self._visualizer(out_dir).plot_delta_series(
                result.series.steps, result.series.delta, report, artifacts['plot'], title=config.name
            )

        artifacts['summary'] = 'summary.json'
        summary = RunSummary(
            config=config.to_dict(),
            config_hash=config.config_hash(),
            report=report,
            sensitivity=result.sensitivity.to_dict(),
            artifacts=artifacts,
            wall_time=result.wall_time if config.output['record_wall_time'] else None,
        )
        write_json(os.path.join(out_dir, artifacts['summary']), summary.to_dict())
        return summary

    def run(self) -> RunSummary:
        """Run the config once and write series.csv, summary.json and delta.svg"""
        logger.info(f"Starting run '{self.config.name}' into {self.out_dir}")
        result = compute_run(self.config)
        summary = self.write_run(self.out_dir, self.config, result)
        self.results['run'] = summary
        self._print_summary(summary)
        return summary

    # ------------------------------------------------------------ sweep

    def sweep(self) -> pd.DataFrame:
        """One run per sweep value; failures are recorded and the sweep continues"""
        config = self.config
        payloads = [(index, value, config) for index, value in config.sweep_points()]
        parameter = config.sweep['parameter']
        logger.info(f"Starting sweep over {parameter} with {len(payloads)} points, {self.workers} workers")

        if self.workers > 1 and len(payloads) > 1:
            with mp.Pool(min(self.workers, len(payloads))) as pool:
                points = pool.map(_sweep_worker, payloads)
        else:
            points = [_sweep_worker(payload) for payload in payloads]

        rows, listing = [], []
        for point in points:
            point_dir = os.path.join(self.out_dir, f"point_{point['index']:03d}")
            entry = {'index': point['index'], 'value': point['value'], 'status': point['status']}
            if point['status'] == 'ok':
                summary = self.write_run(point_dir, point['config'], point['result'])
                point['report'] = summary.report
                entry['summary'] = os.path.join(os.path.basename(point_dir), 'summary.json')
            else:
                os.makedirs(point_dir, exist_ok=True)
                write_json(os.path.join(point_dir, 'error.json'), point['error_payload'])
                entry['error'] = point['error']
                entry['error_report'] = os.path.join(os.path.basename(point_dir), 'error.json')
            rows.append(point)
            listing.append(entry)

        frame = summarize_sweep(rows)
        frame.to_csv(os.path.join(self.out_dir, 'sweep.csv'), index=False, float_format=FLOAT_FORMAT)
        artifacts = self._with_log({'table': 'sweep.csv', 'summary': 'sweep.json'}, self.out_dir)
        if self.plot:
            artifacts['plot'] = 'sweep.svg'
            self._visualizer(self.out_dir).plot_sweep(
                frame['value'].tolist(), frame['lambda_hat'].tolist(), frame['degree_hat'].tolist(),
                parameter, artifacts['plot'],
            )

        comparison = compare_sweep_points(frame)
        write_json(os.path.join(self.out_dir, 'sweep.json'), {
            'schema_version': SCHEMA_VERSION,
            'config': config.to_dict(),
            'config_hash': config.config_hash(),
            'parameter': parameter,
            'points': listing,
            'ranking': comparison['ranking'],
            'rate_spread': rate_spread(frame),
            'artifacts': artifacts,
            'software_version': __version__,
        })
        self.results['sweep'] = frame
        self._print_sweep(frame)
        return frame

    # ------------------------------------------------------------ spectrum

    def spectrum(self) -> Dict:
        """Eigen-decomposition, reconstruction check, characteristic probe and kernel profile"""
        config, spectral = self.config, self.config.spectral
        model = config.build_model()
        lattice, sector = config.build_lattice()
        op = build_floquet(model, lattice, sector, config.boundary)
        rho = build_rho0(config.build_perturbation(), lattice)

        kernel = build_kernel(op, rho, max_dim=spectral['max_dim'])
        errors = reconstruction_errors(kernel, op, rho, spectral['n_max'], defect_tol=spectral['defect_tol'])

        if lattice.K <= CHARACTERISTIC_MAX_K:
            probe = characteristic_probe(
                op, rho, spectral['check_steps'], spectral['stencil_step'], spectral['stencil']
            ).to_dict()
        else:
            probe = {'skipped': f"dense displacement operators need K <= {CHARACTERISTIC_MAX_K}"}

        profile = kernel_profile(kernel, spectral['bins'])
        main = kernel.branches[0].spectrum
        artifacts = self._with_log({'summary': 'spectrum.json', 'profile': 'kernel_profile.csv'}, self.out_dir)
        pd.DataFrame({
            'gap_lo': profile.edges[:-1],
            'gap_hi': profile.edges[1:],
            'fraction': profile.fractions,
        }).to_csv(os.path.join(self.out_dir, artifacts['profile']), index=False, float_format=FLOAT_FORMAT)
        if self.plot:
            artifacts['plot'] = 'kernel_profile.svg'
            self._visualizer(self.out_dir).plot_kernel_profile(profile.edges, profile.fractions, artifacts['plot'])

        result = {
            'schema_version': SCHEMA_VERSION,
            'config': config.to_dict(),
            'config_hash': config.config_hash(),
            'dimension': lattice.d,
            'branches': len(kernel.branches),
            'eigenphases': main.eigenphases,
            'min_modulus': float(np.min(main.moduli)),
            'max_modulus': float(np.max(main.moduli)),
            'defect': kernel.max_defect,
            'parseval_defect': parseval_defect(kernel),
            'reconstruction': {
                'n_max': spectral['n_max'],
                'max_relative_error': float(np.max(errors)),
                'per_step': errors,
            },
            'characteristic': probe,
            'kernel_profile': profile.to_dict(),
            'artifacts': artifacts,
            'software_version': __version__,
        }
        write_json(os.path.join(self.out_dir, artifacts['summary']), result)
        self.results['spectrum'] = result
        logger.info(
            f"Spectrum: d={lattice.d}, defect={kernel.max_defect:.3g}, "
            f"reconstruction error={float(np.max(errors)):.3g}"
        )
        return result

    # ------------------------------------------------------------ printing

    def _print_summary(self, summary: RunSummary):
        report = summary.report
        print("\n" + "=" * 60)
        print(f"QUANTUM LYAPUNOV RUN: {self.config.name}")
        print("=" * 60)
        print(f"  Verdict: {report['verdict']}")
        print(f"  Rate λ: {report['lambda_hat']:.6f} per kick ({report['rate_method']})")
        print(f"  Degree: {report['degree_hat']:.4f}")
        print(f"  Fit window: n = {report['fit_window'][0]}..{report['fit_window'][1]}")
        print(f"  Leakage at window end: {report['leakage_at_hi']:.3g}")
        print(f"  Output: {self.out_dir}")
        print("=" * 60)

    def _print_sweep(self, frame: pd.DataFrame):
        print("\n" + "=" * 60)
        print(f"SWEEP OVER {self.config.sweep['parameter']}")
        print("=" * 60)
        for _, row in frame.iterrows():
            if row['status'] == 'ok':
                print(f"  {row['value']!s:>10}: {row['verdict']:<11} λ={row['lambda_hat']:.5f} "
                      f"degree={row['degree_hat']:.3f}")
            else:
                print(f"  {row['value']!s:>10}: FAILED ({row['error']})")
        print("=" * 60)
