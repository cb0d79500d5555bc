import copy
import os

import numpy as np
import pytest

from src.dynamics.floquet import PERIODIC, build_floquet
from src.dynamics.kicks import KickModel
from src.torus.lattice import LatticeSpec, reduce_momentum

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIGS = os.path.join(ROOT, "configs")

GOLDEN = 0.5 * (1.0 + np.sqrt(5.0))
CAT_RATE = 2.0 * np.log(GOLDEN)

SMALL_CONFIG = {
    "config_version": 1,
    "name": "small_free",
    "model": {"kind": "free", "resonant_m": 1},
    "lattice": {"K": 8, "beta": [0.0, 0.0]},
    "perturbation": {"q0": [0.3, 0.1], "v1": [1.0, 0.0], "k_window": 2},
    "run": {"N": 10},
    "output": {"dir": "results/small_free", "plot": False},
}


@pytest.fixture
def config_path():
    def _path(name: str) -> str:
        return os.path.join(CONFIGS, f"{name}.yaml")

    return _path


@pytest.fixture
def small_config():
    """Fresh copy of a fast free-motion config dict"""
    return copy.deepcopy(SMALL_CONFIG)


@pytest.fixture
def lattice8():
    return LatticeSpec(8)


@pytest.fixture
def generic_sector():
    return reduce_momentum((0.3, 0.7))


@pytest.fixture
def origin_sector():
    return reduce_momentum((0.0, 0.0))


@pytest.fixture
def periodic_ops(lattice8, generic_sector, origin_sector):
    """Exactly unitary operators of the three kick families at K = 8"""
    return {
        "free": build_floquet(KickModel.free(tau=1.0), lattice8, generic_sector, PERIODIC),
        "position_kick": build_floquet(KickModel.position_kick(1.0, tau=1.0), lattice8, generic_sector, PERIODIC),
        "cat_kick": build_floquet(KickModel.cat_kick(), lattice8, origin_sector, PERIODIC),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
