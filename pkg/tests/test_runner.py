import json
import os

import pandas as pd
import pytest

from src.experiment import runner as runner_module
from src.experiment.config_loader import ExperimentConfig, load_config
from src.experiment.runner import (
    EXIT_FAILURE,
    EXIT_INSUFFICIENT_DATA,
    EXIT_INVALID,
    EXIT_LEAKAGE,
    EXIT_SPECTRAL,
    ExperimentRunner,
    compute_run,
    exit_code_for,
    write_error_report,
)
from src.utils.errors import (
    ConfigError,
    HeisenbergRelationError,
    InsufficientDataError,
    InvalidArgumentError,
    SpectralDefectError,
    TooLargeError,
)
from src.utils.metrics import SERIES_COLUMNS, SWEEP_COLUMNS


def _read(path):
    with open(path, 'rb') as f_out:
        return f_out.read()


def _load_json(path):
    with open(path) as f_json:
        return json.load(f_json)


class TestRun:
    def test_run_writes_series_and_summary(self, small_config, tmp_path):
        config = ExperimentConfig.from_dict(small_config)
        summary = ExperimentRunner(config, out_dir=str(tmp_path), plot=False).run()

        frame = pd.read_csv(tmp_path / "series.csv")
        assert list(frame.columns) == SERIES_COLUMNS
        assert frame['n'].tolist() == list(range(11))

        data = _load_json(tmp_path / "summary.json")
        assert data['schema_version'] == 1
        assert data['status'] == 'ok'
        assert data['report']['verdict'] == 'bounded'
        assert data['wall_time'] is None
        assert data['config_hash'] == config.config_hash()
        assert data['artifacts'] == {'series': 'series.csv', 'summary': 'summary.json'}
        assert data['sensitivity']['results'] == [False, False]
        assert summary.report['verdict'] == 'bounded'

    def test_identical_configs_give_identical_files(self, small_config, tmp_path):
        config = ExperimentConfig.from_dict(small_config)
        for name in ("a", "b"):
            ExperimentRunner(config, out_dir=str(tmp_path / name), plot=False).run()
        for artifact in ("series.csv", "summary.json"):
            assert _read(tmp_path / "a" / artifact) == _read(tmp_path / "b" / artifact)

    def test_plot_is_listed(self, small_config, tmp_path):
        config = ExperimentConfig.from_dict(small_config)
        summary = ExperimentRunner(config, out_dir=str(tmp_path), plot=True).run()
        assert summary.artifacts['plot'] == 'delta.svg'
        assert (tmp_path / "delta.svg").exists()

    def test_wall_time_on_request(self, small_config, tmp_path):
        small_config['output']['record_wall_time'] = True
        config = ExperimentConfig.from_dict(small_config)
        ExperimentRunner(config, out_dir=str(tmp_path), plot=False).run()
        assert _load_json(tmp_path / "summary.json")['wall_time'] >= 0.0

    def test_truncation_probe_is_reported(self, small_config):
        small_config['lattice']['K'] = 4
        small_config['run']['truncation_probe'] = True
        result = compute_run(ExperimentConfig.from_dict(small_config))
        probe = result.report.truncation
        assert probe['K_probe'] == 8
        assert probe['max_relative_delta_change'] < 1e-10


class TestSweep:
    def test_failed_point_does_not_stop_sweep(self, small_config, tmp_path):
        small_config['sweep'] = {'parameter': 'lattice.K', 'values': [8, 0, 6]}
        config = ExperimentConfig.from_dict(small_config)
        frame = ExperimentRunner(config, out_dir=str(tmp_path), plot=False).sweep()

        assert frame['status'].tolist() == ['ok', 'error', 'ok']
        assert (tmp_path / "point_000" / "summary.json").exists()
        error = _load_json(tmp_path / "point_001" / "error.json")
        assert error['error_type'] == 'ConfigError'
        assert error['key_path'].endswith('lattice.K')
        assert (tmp_path / "point_002" / "summary.json").exists()

        table = pd.read_csv(tmp_path / "sweep.csv")
        assert list(table.columns) == SWEEP_COLUMNS
        listing = _load_json(tmp_path / "sweep.json")
        assert [point['status'] for point in listing['points']] == ['ok', 'error', 'ok']
        assert listing['points'][1]['error_report'] == os.path.join('point_001', 'error.json')

    def test_unexpected_error_in_a_point_is_recorded(self, small_config, tmp_path, monkeypatch):
        real_compute_run = runner_module.compute_run

        def flaky_compute_run(config):
            if config.lattice['K'] == 6:
                raise FloatingPointError("overflow in point")
            return real_compute_run(config)

        monkeypatch.setattr(runner_module, 'compute_run', flaky_compute_run)
        small_config['sweep'] = {'parameter': 'lattice.K', 'values': [8, 6, 4]}
        config = ExperimentConfig.from_dict(small_config)
        frame = ExperimentRunner(config, out_dir=str(tmp_path), plot=False).sweep()

        assert frame['status'].tolist() == ['ok', 'error', 'ok']
        error = _load_json(tmp_path / "point_001" / "error.json")
        assert error['error_type'] == 'FloatingPointError'
        assert error['exit_code'] == EXIT_FAILURE
        assert (tmp_path / "point_000" / "summary.json").exists()
        assert (tmp_path / "point_002" / "summary.json").exists()

    def test_log_file_is_listed_for_the_top_level_only(self, small_config, tmp_path):
        small_config['sweep'] = {'parameter': 'run.N', 'values': [4, 6]}
        config = ExperimentConfig.from_dict(small_config)
        ExperimentRunner(config, out_dir=str(tmp_path), plot=False, log_file='run.log').sweep()
        assert _load_json(tmp_path / "sweep.json")['artifacts']['log'] == 'run.log'
        assert 'log' not in _load_json(tmp_path / "point_000" / "summary.json")['artifacts']

    def test_parallel_sweep_matches_serial(self, small_config, tmp_path):
        small_config['sweep'] = {'parameter': 'run.N', 'values': [4, 6, 8]}
        config = ExperimentConfig.from_dict(small_config)
        ExperimentRunner(config, out_dir=str(tmp_path / "serial"), plot=False, workers=1).sweep()
        ExperimentRunner(config, out_dir=str(tmp_path / "parallel"), plot=False, workers=2).sweep()
        for artifact in ("sweep.csv", "sweep.json", os.path.join("point_002", "series.csv")):
            assert _read(tmp_path / "serial" / artifact) == _read(tmp_path / "parallel" / artifact)

    def test_sweep_needs_block(self, small_config, tmp_path):
        runner = ExperimentRunner(ExperimentConfig.from_dict(small_config), out_dir=str(tmp_path), plot=False)
        with pytest.raises(ConfigError):
            runner.sweep()


class TestSpectrum:
    def test_spectrum_on_small_lattice(self, config_path, tmp_path):
        data = load_config(config_path("free_spectrum")).to_dict()
        data['lattice']['K'] = 4
        data['spectral']['check_steps'] = [0, 1]
        config = ExperimentConfig.from_dict(data)
        result = ExperimentRunner(config, out_dir=str(tmp_path), plot=False).spectrum()

        assert result['dimension'] == 81
        assert result['reconstruction']['max_relative_error'] < 1e-8
        assert result['characteristic']['max_discrepancy'] < 1e-5
        profile = pd.read_csv(tmp_path / "kernel_profile.csv")
        assert list(profile.columns) == ['gap_lo', 'gap_hi', 'fraction']
        assert len(profile) == config.spectral['bins']
        assert _load_json(tmp_path / "spectrum.json")['schema_version'] == 1

    def test_spectrum_dimension_cap(self, config_path, tmp_path):
        data = load_config(config_path("free_spectrum")).to_dict()
        data['spectral']['max_dim'] = 10
        runner = ExperimentRunner(ExperimentConfig.from_dict(data), out_dir=str(tmp_path), plot=False)
        with pytest.raises(TooLargeError):
            runner.spectrum()


@pytest.mark.parametrize(
    "error, code",
    [
        (ConfigError('run.N', 'must be >= 2'), EXIT_INVALID),
        (InvalidArgumentError('bad'), EXIT_INVALID),
        (InsufficientDataError('few', leakage_limited=False), EXIT_INSUFFICIENT_DATA),
        (InsufficientDataError('few', leakage_limited=True), EXIT_LEAKAGE),
        (SpectralDefectError('defect', defect=1e-3), EXIT_SPECTRAL),
        (TooLargeError('big'), EXIT_SPECTRAL),
        (HeisenbergRelationError('orientation'), EXIT_FAILURE),
        (RuntimeError('boom'), EXIT_FAILURE),
    ],
)
def test_exit_codes(error, code):
    assert exit_code_for(error) == code


def test_error_report_payload(tmp_path):
    error = InsufficientDataError('few', leakage_profile=[0.0, 1e-3], leakage_limited=True)
    write_error_report(str(tmp_path), error)
    payload = _load_json(tmp_path / "error.json")
    assert payload['exit_code'] == EXIT_LEAKAGE
    assert payload['leakage_profile'] == [0.0, 1e-3]
    assert payload['key_path'] is None
