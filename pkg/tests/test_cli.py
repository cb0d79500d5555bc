import json

import numpy as np
import pytest
import yaml

from run_simulation import build_parser, main
from src.dynamics.floquet import build_floquet
from src.dynamics.kicks import KickModel
from src.experiment import checks as checks_module
from src.experiment.config_loader import load_config
from src.torus.lattice import LatticeSpec, reduce_momentum


def _write_config(tmp_path, data, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def _load_json(path):
    with open(path) as f_json:
        return json.load(f_json)


def test_parser_flags():
    args = build_parser().parse_args(["sweep", "c.yaml", "--workers", "3", "--no-plot"])
    assert args.command == "sweep"
    assert args.workers == 3
    assert args.plot is False
    args = build_parser().parse_args(["check", "--seed", "7"])
    assert args.seed == 7
    assert args.corrupt_cat_orientation is None


def test_run_succeeds(small_config, tmp_path):
    path = _write_config(tmp_path, small_config)
    out_dir = tmp_path / "out"
    assert main(["run", path, "--out-dir", str(out_dir), "--no-plot"]) == 0
    assert (out_dir / "lyapunov_run.log").exists()
    assert _load_json(out_dir / "summary.json")["artifacts"]["log"] == "lyapunov_run.log"


def test_invalid_config_exits_2(small_config, tmp_path):
    small_config["lattice"]["K"] = 0
    out_dir = tmp_path / "out"
    assert main(["run", _write_config(tmp_path, small_config), "--out-dir", str(out_dir)]) == 2
    error = _load_json(out_dir / "error.json")
    assert error["key_path"] == "lattice.K"
    assert error["exit_code"] == 2


def test_leakage_limited_run_exits_4(tmp_path):
    data = {
        "config_version": 1,
        "name": "cat_small_window",
        "model": {"kind": "cat_kick", "resonant_m": 1, "M": [[1, 1], [1, 2]]},
        "lattice": {"K": 4, "beta": [0.0, 0.0]},
        "perturbation": {
            "q0": [0.7853981633974483, 0.0],
            "v1": [0.0, 0.0],
            "v2": [1.0, 1.618033988749895],
            "k_window": 1,
        },
        "run": {"N": 8, "leakage_budget": 1e-6},
        "output": {"dir": str(tmp_path / "out"), "plot": False},
    }
    assert main(["run", _write_config(tmp_path, data)]) == 4
    error = _load_json(tmp_path / "out" / "error.json")
    assert error["error_type"] == "InsufficientDataError"
    assert error["leakage_limited"] is True
    assert len(error["leakage_profile"]) == 9


def test_spectrum_too_large_exits_5(config_path, tmp_path):
    data = load_config(config_path("free_spectrum")).to_dict()
    data["spectral"]["max_dim"] = 10
    out_dir = tmp_path / "out"
    assert main(["spectrum", _write_config(tmp_path, data), "--out-dir", str(out_dir), "--no-plot"]) == 5
    assert _load_json(out_dir / "error.json")["error_type"] == "TooLargeError"


@pytest.mark.slow
def test_check_passes(tmp_path):
    assert main(["check", "--out-dir", str(tmp_path)]) == 0
    checks = _load_json(tmp_path / "checks.json")
    assert checks["passed"] is True
    assert checks["seed"] == 1234
    assert len(checks["checks"]) == 8


@pytest.mark.slow
def test_corrupted_orientation_fails_check(tmp_path):
    calibrated = build_floquet(KickModel.cat_kick(), LatticeSpec(4), reduce_momentum((0.0, 0.0))).orientation
    wrong = "M_inv" if calibrated in ("M", "M_T") else "M"
    assert main(["check", "--out-dir", str(tmp_path), "--corrupt-cat-orientation", wrong]) == 1
    checks = {check["name"]: check for check in _load_json(tmp_path / "checks.json")["checks"]}
    assert checks["heisenberg-relation"]["passed"] is False
    assert "HeisenbergRelationError" in checks["heisenberg-relation"]["detail"]


@pytest.mark.slow
def test_crashing_check_is_recorded_and_the_rest_still_run(tmp_path, monkeypatch):
    def broken_closed_form():
        raise np.linalg.LinAlgError("singular matrix")

    monkeypatch.setattr(checks_module, "check_cat_closed_form", broken_closed_form)
    assert main(["check", "--out-dir", str(tmp_path)]) == 1
    checks = {check["name"]: check for check in _load_json(tmp_path / "checks.json")["checks"]}
    assert len(checks) == 8
    assert checks["cat-closed-form"]["passed"] is False
    assert "LinAlgError" in checks["cat-closed-form"]["detail"]
    assert checks["heisenberg-relation"]["passed"] is True
