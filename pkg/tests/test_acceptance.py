"""Production-size runs of the bundled configs"""

import numpy as np
import pytest

from src.analysis.cat_oracle import CatOracle
from src.experiment.config_loader import ExperimentConfig, load_config
from src.experiment.runner import ExperimentRunner, compute_run
from src.utils.metrics import rate_spread

pytestmark = pytest.mark.slow


def test_free_resonant_is_bounded(config_path):
    result = compute_run(load_config(config_path("free_resonant")))
    np.testing.assert_allclose(result.series.delta / result.series.delta[0], 1.0, atol=1e-10)
    assert result.report.verdict == "bounded"
    assert not result.sensitivity.results[0]


def test_cos_kick_grows_linearly(config_path):
    result = compute_run(load_config(config_path("cos_kick")))
    report = result.report
    assert report.verdict == "polynomial"
    assert report.degree_hat == pytest.approx(1.0, abs=0.15)
    assert report.lambda_hat < 0.02


def test_cat_kick_rate(config_path):
    result = compute_run(load_config(config_path("cat_kick")))
    report = result.report
    assert report.verdict == "exponential"
    assert report.fit_window == (0, 4)
    assert report.lambda_hat == pytest.approx(CatOracle().rate, rel=0.02)
    assert result.sensitivity.results == [True, True]


def test_cat_rate_survives_doubling_the_cutoff(config_path):
    data = load_config(config_path("cat_kick")).to_dict()
    data["lattice"]["K"] = 32
    data["run"]["truncation_probe"] = True
    config = ExperimentConfig.from_dict(data)
    probe = compute_run(config).report.truncation
    assert probe["K"] == 32 and probe["K_probe"] == 64
    assert probe["max_relative_delta_change"] < 1e-6
    assert probe["relative_rate_change"] < 0.005


def test_cat_rate_is_stable_across_cutoffs(config_path, tmp_path):
    frame = ExperimentRunner(load_config(config_path("cat_kick_k_sweep")), out_dir=str(tmp_path), plot=False).sweep()
    assert (frame["status"] == "ok").all()
    assert (frame["verdict"] == "exponential").all()
    assert rate_spread(frame) < 0.02


def test_alpha_sweep_is_polynomial_throughout(config_path, tmp_path):
    frame = ExperimentRunner(
        load_config(config_path("cos_kick_alpha_sweep")), out_dir=str(tmp_path), plot=False, workers=3
    ).sweep()
    assert (frame["verdict"] == "polynomial").all()
    # shear from the shifted quasimomentum alone
    free_point = frame[frame["value"] == 0.0].iloc[0]
    assert free_point["degree_hat"] == pytest.approx(1.0, abs=0.15)
