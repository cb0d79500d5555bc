"""
Config-driven runs, sweeps, spectral analyses and the invariant suite
"""

from .checks import CheckResult, print_check_table, run_checks, write_checks
from .config_loader import ExperimentConfig, load_config
from .runner import ExperimentRunner, RunResult, RunSummary, compute_run, exit_code_for, write_error_report

__all__ = [
    'CheckResult', 'print_check_table', 'run_checks', 'write_checks',
    'ExperimentConfig', 'load_config',
    'ExperimentRunner', 'RunResult', 'RunSummary', 'compute_run', 'exit_code_for', 'write_error_report',
]
