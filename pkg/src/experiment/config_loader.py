"""
YAML experiment configs: defaults, validation, builders and sweep overrides.

Every validation failure raises ConfigError naming the offending key path,
and happens before any operator is built.
"""

import copy
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

from src.dynamics.floquet import BOUNDARIES
from src.dynamics.kicks import CAT_KICK, CAT_ORIENTATIONS, FREE, POSITION_KICK, VARIANTS, KickModel
from src.perturbation.rho_zero import FD_SCHEMES, PerturbationSpec
from src.torus.lattice import BlochSector, LatticeSpec, reduce_momentum
from src.utils.errors import ConfigError, InvalidArgumentError

logger = logging.getLogger(__name__)

# Configuration
try:
    from config import (
        CONFIG_VERSION,
        LATTICE_CONFIG,
        MODEL_CONFIG,
        OUTPUT_CONFIG,
        PERTURBATION_CONFIG,
        RUN_CONFIG,
        SPECTRAL_CONFIG,
    )
except ImportError:
    logger.warning("config.py not found. Using built-in defaults...")
    CONFIG_VERSION = 1
    MODEL_CONFIG = {
        'kind': 'free', 'tau': 4 * math.pi, 'resonant_m': None, 'alpha': 1.0,
        'g': [[1, 0, 0.5, 0.0], [-1, 0, 0.5, 0.0], [0, 1, 0.5, 0.0], [0, -1, 0.5, 0.0]],
        'M': [[1, 1], [1, 2]], 'boundary': 'absorbing', 'cat_orientation': None,
    }
    LATTICE_CONFIG = {'K': 32, 'beta': [0.0, 0.0]}
    PERTURBATION_CONFIG = {
        'q0': [0.0, 0.0], 'p0': None, 'v1': [1.0, 0.0], 'v2': [0.0, 0.0],
        'k_window': None, 'fd_step': 1e-4, 'fd_scheme': 'central',
    }
    RUN_CONFIG = {
        'N': 50, 'leakage_budget': 1e-6, 'thresholds': [10.0, 100.0], 'horizon': 1,
        'fit_window': None, 'truncation_probe': False,
    }
    OUTPUT_CONFIG = {'dir': 'results', 'plot': True, 'record_wall_time': False}
    SPECTRAL_CONFIG = {
        'max_dim': 4096, 'defect_tol': 1e-8, 'n_max': 20, 'stencil_step': 1e-3,
        'stencil': 'five_point', 'check_steps': [0, 1, 5], 'bins': 16,
    }

SECTION_DEFAULTS = {
    'model': MODEL_CONFIG,
    'lattice': LATTICE_CONFIG,
    'perturbation': PERTURBATION_CONFIG,
    'run': RUN_CONFIG,
    'output': OUTPUT_CONFIG,
    'spectral': SPECTRAL_CONFIG,
}
TOP_LEVEL_KEYS = {'config_version', 'name', 'sweep'} | set(SECTION_DEFAULTS)
BETA_TOL = 1e-12


# ---------------------------------------------------------------- field checks

def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool)


def _as_int(path: str, value: Any, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not _is_number(value) or float(value) != int(value):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {value}")
    return value


def _as_float(path: str, value: Any, positive: bool = False, non_negative: bool = False) -> float:
    if not _is_number(value) or not math.isfinite(float(value)):
        raise ConfigError(path, f"expected a finite number, got {value!r}")
    value = float(value)
    if positive and value <= 0:
        raise ConfigError(path, f"must be > 0, got {value}")
    if non_negative and value < 0:
        raise ConfigError(path, f"must be >= 0, got {value}")
    return value


def _as_vector(path: str, value: Any) -> List[float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(path, f"expected a list of two numbers, got {value!r}")
    return [_as_float(f"{path}[{i}]", x) for i, x in enumerate(value)]


def _as_bool(path: str, value: Any) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(path, f"expected true or false, got {value!r}")
    return value


def _as_choice(path: str, value: Any, choices) -> str:
    if value not in choices:
        raise ConfigError(path, f"must be one of {list(choices)}, got {value!r}")
    return value


def _merge(section: str, given: Any) -> Dict:
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(section, f"expected a mapping, got {type(given).__name__}")
    defaults = SECTION_DEFAULTS[section]
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"{section}.{unknown[0]}", "unknown key")
    merged = copy.deepcopy(defaults)
    merged.update(copy.deepcopy(given))
    return merged


# ---------------------------------------------------------------- sections

def _validate_model(raw: Dict) -> Dict:
    model = _merge('model', raw)
    model['kind'] = _as_choice('model.kind', model['kind'], VARIANTS)
    model['boundary'] = _as_choice('model.boundary', model['boundary'], BOUNDARIES)
    model['alpha'] = _as_float('model.alpha', model['alpha'])

    tau = _as_float('model.tau', model['tau'], positive=True)
    if model['resonant_m'] is not None:
        m = _as_int('model.resonant_m', model['resonant_m'], minimum=1)
        resonant_tau = 4.0 * math.pi * m
        if 'tau' in (raw or {}) and abs(tau - resonant_tau) > 1e-12 * resonant_tau:
            raise ConfigError('model.tau', f"conflicts with resonant_m={m} (tau would be {resonant_tau})")
        model['resonant_m'], tau = m, resonant_tau
    model['tau'] = tau

    g = model['g']
    if not isinstance(g, (list, tuple)) or not g:
        raise ConfigError('model.g', "expected a nonempty list of [m1, m2, re, im] entries")
    entries = []
    for i, entry in enumerate(g):
        if not isinstance(entry, (list, tuple)) or len(entry) not in (3, 4):
            raise ConfigError(f"model.g[{i}]", f"expected [m1, m2, re] or [m1, m2, re, im], got {entry!r}")
        m1 = _as_int(f"model.g[{i}][0]", entry[0])
        m2 = _as_int(f"model.g[{i}][1]", entry[1])
        re = _as_float(f"model.g[{i}][2]", entry[2])
        im = _as_float(f"model.g[{i}][3]", entry[3]) if len(entry) == 4 else 0.0
        entries.append([m1, m2, re, im])
    model['g'] = entries

    M = model['M']
    if not isinstance(M, (list, tuple)) or len(M) != 2 or any(
        not isinstance(row, (list, tuple)) or len(row) != 2 for row in M
    ):
        raise ConfigError('model.M', f"expected a 2x2 integer matrix, got {M!r}")
    M = [[_as_int(f"model.M[{i}][{j}]", M[i][j]) for j in range(2)] for i in range(2)]
    if model['kind'] == CAT_KICK:
        det = M[0][0] * M[1][1] - M[0][1] * M[1][0]
        if det != 1:
            raise ConfigError('model.M', f"cat matrix must have determinant 1, got {det}")
    model['M'] = M

    if model['cat_orientation'] is not None:
        model['cat_orientation'] = _as_choice('model.cat_orientation', model['cat_orientation'], CAT_ORIENTATIONS)
    return model


def _validate_lattice(raw: Dict) -> Dict:
    lattice = _merge('lattice', raw)
    lattice['K'] = _as_int('lattice.K', lattice['K'], minimum=1)
    lattice['beta'] = _as_vector('lattice.beta', lattice['beta'])
    return lattice


def _validate_perturbation(raw: Dict, lattice: Dict, beta_given: bool) -> Dict:
    pert = _merge('perturbation', raw)
    for key in ('q0', 'v1', 'v2'):
        pert[key] = _as_vector(f"perturbation.{key}", pert[key])
    if not any(pert['v1']) and not any(pert['v2']):
        raise ConfigError('perturbation.v1', "direction (v1, v2) must be nonzero")
    if pert['p0'] is not None:
        pert['p0'] = _as_vector('perturbation.p0', pert['p0'])
        fractional = reduce_momentum(pert['p0']).beta_array
        if beta_given:
            if np.max(np.abs(fractional - np.array(lattice['beta']))) > BETA_TOL:
                raise ConfigError(
                    'perturbation.p0',
                    f"fractional part {fractional.tolist()} differs from lattice.beta {lattice['beta']}",
                )
        else:
            lattice['beta'] = [float(x) for x in fractional]
    if pert['k_window'] is not None:
        pert['k_window'] = _as_int('perturbation.k_window', pert['k_window'], minimum=0)
        if pert['k_window'] > lattice['K']:
            raise ConfigError('perturbation.k_window', f"exceeds lattice.K={lattice['K']}")
    pert['fd_step'] = _as_float('perturbation.fd_step', pert['fd_step'], non_negative=True)
    if any(pert['v2']) and pert['fd_step'] == 0:
        raise ConfigError('perturbation.fd_step', "must be > 0 when v2 is nonzero")
    pert['fd_scheme'] = _as_choice('perturbation.fd_scheme', pert['fd_scheme'], FD_SCHEMES)
    return pert


def _validate_run(raw: Dict) -> Dict:
    run = _merge('run', raw)
    run['N'] = _as_int('run.N', run['N'], minimum=2)
    run['leakage_budget'] = _as_float('run.leakage_budget', run['leakage_budget'], positive=True)
    if not isinstance(run['thresholds'], (list, tuple)) or not run['thresholds']:
        raise ConfigError('run.thresholds', "expected a nonempty list of numbers")
    run['thresholds'] = [
        _as_float(f"run.thresholds[{i}]", x, positive=True) for i, x in enumerate(run['thresholds'])
    ]
    run['horizon'] = _as_int('run.horizon', run['horizon'], minimum=0)
    if run['horizon'] >= run['N']:
        raise ConfigError('run.horizon', f"must be < N={run['N']}")
    if run['fit_window'] is not None:
        window = run['fit_window']
        if not isinstance(window, (list, tuple)) or len(window) != 2:
            raise ConfigError('run.fit_window', f"expected [lo, hi], got {window!r}")
        lo = _as_int('run.fit_window[0]', window[0], minimum=0)
        hi = _as_int('run.fit_window[1]', window[1], minimum=lo)
        run['fit_window'] = [lo, hi]
    run['truncation_probe'] = _as_bool('run.truncation_probe', run['truncation_probe'])
    return run


def _validate_output(raw: Dict) -> Dict:
    output = _merge('output', raw)
    if not isinstance(output['dir'], str) or not output['dir']:
        raise ConfigError('output.dir', f"expected a directory name, got {output['dir']!r}")
    output['plot'] = _as_bool('output.plot', output['plot'])
    output['record_wall_time'] = _as_bool('output.record_wall_time', output['record_wall_time'])
    return output


def _validate_spectral(raw: Dict) -> Dict:
    spectral = _merge('spectral', raw)
    spectral['max_dim'] = _as_int('spectral.max_dim', spectral['max_dim'], minimum=1)
    spectral['defect_tol'] = _as_float('spectral.defect_tol', spectral['defect_tol'], positive=True)
    spectral['n_max'] = _as_int('spectral.n_max', spectral['n_max'], minimum=0)
    spectral['stencil_step'] = _as_float('spectral.stencil_step', spectral['stencil_step'], positive=True)
    spectral['stencil'] = _as_choice('spectral.stencil', spectral['stencil'], ('central', 'five_point'))
    steps = spectral['check_steps']
    if not isinstance(steps, (list, tuple)) or not steps:
        raise ConfigError('spectral.check_steps', "expected a nonempty list of step counts")
    spectral['check_steps'] = [_as_int(f"spectral.check_steps[{i}]", s, minimum=0) for i, s in enumerate(steps)]
    spectral['bins'] = _as_int('spectral.bins', spectral['bins'], minimum=8)
    return spectral


def _validate_sweep(raw: Any) -> Optional[Dict]:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ConfigError('sweep', "expected a mapping with parameter and values")
    unknown = sorted(set(raw) - {'parameter', 'values'})
    if unknown:
        raise ConfigError(f"sweep.{unknown[0]}", "unknown key")
    parameter = raw.get('parameter')
    if not isinstance(parameter, str) or parameter.count('.') != 1:
        raise ConfigError('sweep.parameter', f"expected a dotted key path like model.alpha, got {parameter!r}")
    section, key = parameter.split('.')
    if section not in SECTION_DEFAULTS or key not in SECTION_DEFAULTS[section]:
        raise ConfigError('sweep.parameter', f"{parameter} is not a configurable key")
    values = raw.get('values')
    if not isinstance(values, list) or not values:
        raise ConfigError('sweep.values', "expected a nonempty list")
    return {'parameter': parameter, 'values': copy.deepcopy(values)}


def _canonical(value: Any) -> Any:
    """Plain lists, ints and floats so YAML and JSON echoes agree"""
    if isinstance(value, dict):
        return {k: _canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


# ---------------------------------------------------------------- config object

@dataclass
class ExperimentConfig:
    """Validated experiment description"""

    name: str
    model: Dict
    lattice: Dict
    perturbation: Dict
    run: Dict
    output: Dict
    spectral: Dict
    sweep: Optional[Dict] = None
    config_version: int = CONFIG_VERSION
    source: Optional[str] = field(default=None, compare=False)

    @classmethod
    def from_dict(cls, data: Dict, source: Optional[str] = None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError('<root>', f"expected a mapping at top level, got {type(data).__name__}")
        unknown = sorted(set(data) - TOP_LEVEL_KEYS)
        if unknown:
            raise ConfigError(unknown[0], "unknown top-level key")
        version = data.get('config_version', CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError('config_version', f"unsupported version {version!r} (expected {CONFIG_VERSION})")
        name = data.get('name', 'experiment')
        if not isinstance(name, str) or not name:
            raise ConfigError('name', f"expected a nonempty string, got {name!r}")

        lattice_raw = data.get('lattice') or {}
        lattice = _validate_lattice(lattice_raw)
        beta_given = isinstance(lattice_raw, dict) and 'beta' in lattice_raw
        config = cls(
            name=name,
            model=_validate_model(data.get('model')),
            lattice=lattice,
            perturbation=_validate_perturbation(data.get('perturbation'), lattice, beta_given),
            run=_validate_run(data.get('run')),
            output=_validate_output(data.get('output')),
            spectral=_validate_spectral(data.get('spectral')),
            sweep=_validate_sweep(data.get('sweep')),
            config_version=version,
            source=source,
        )
        config._check_buildable()
        return config

    @classmethod
    def from_yaml(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, 'r') as f_config:
                data = yaml.safe_load(f_config)
        except OSError as e:
            raise ConfigError('<file>', f"cannot read {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError('<file>', f"invalid YAML in {path}: {e}") from e
        logger.info(f"Loaded config {path}")
        return cls.from_dict(data or {}, source=path)

    def to_dict(self) -> Dict:
        """Echo written into summaries; from_dict(to_dict()) gives an equal config"""
        data = {
            'config_version': self.config_version,
            'name': self.name,
            'model': self.model,
            'lattice': self.lattice,
            'perturbation': self.perturbation,
            'run': self.run,
            'output': self.output,
            'spectral': self.spectral,
        }
        if self.sweep is not None:
            data['sweep'] = self.sweep
        return _canonical(copy.deepcopy(data))

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    # ------------------------------------------------------------ builders

    @property
    def boundary(self) -> str:
        return self.model['boundary']

    @property
    def p0(self) -> List[float]:
        """Reference momentum; the lattice beta when none was given"""
        return self.perturbation['p0'] if self.perturbation['p0'] is not None else self.lattice['beta']

    def build_model(self, cat_orientation: Optional[str] = None) -> KickModel:
        model = self.model
        kind = model['kind']
        if kind == FREE:
            return KickModel.free(tau=model['tau'])
        if kind == POSITION_KICK:
            g = [((m1, m2), complex(re, im)) for m1, m2, re, im in model['g']]
            return KickModel.position_kick(model['alpha'], g=g, tau=model['tau'])
        return KickModel.cat_kick(model['M'], tau=model['tau'], orientation=cat_orientation or model['cat_orientation'])

    def build_lattice(self) -> Tuple[LatticeSpec, BlochSector]:
        return LatticeSpec(self.lattice['K']), reduce_momentum(self.p0)

    def build_perturbation(self) -> PerturbationSpec:
        pert = self.perturbation
        return PerturbationSpec(
            q0=tuple(pert['q0']),
            p0=tuple(self.p0),
            v1=tuple(pert['v1']),
            v2=tuple(pert['v2']),
            k_window=pert['k_window'],
            fd_step=pert['fd_step'],
            fd_scheme=pert['fd_scheme'],
        )

    def _check_buildable(self):
        for path, build in (('model', self.build_model), ('lattice', self.build_lattice),
                            ('perturbation', self.build_perturbation)):
            try:
                build()
            except InvalidArgumentError as e:
                raise ConfigError(path, str(e)) from e

    # ------------------------------------------------------------ sweeps

    def with_override(self, parameter: str, value: Any) -> "ExperimentConfig":
        """Copy with one dotted key replaced, re-validated"""
        data = self.to_dict()
        data.pop('sweep', None)
        section, key = parameter.split('.')
        data[section][key] = copy.deepcopy(value)
        if section == 'model' and key == 'tau':
            data['model']['resonant_m'] = None
        if section == 'lattice' and key == 'beta':
            data['perturbation']['p0'] = None
        try:
            return ExperimentConfig.from_dict(data, source=self.source)
        except ConfigError as e:
            raise ConfigError(f"sweep.values ({parameter}={value!r}) -> {e.key_path}", e.reason) from e

    def sweep_points(self) -> List[Tuple[int, Any]]:
        if self.sweep is None:
            raise ConfigError('sweep', "config has no sweep block")
        return list(enumerate(self.sweep['values']))


def load_config(path: str) -> ExperimentConfig:
    return ExperimentConfig.from_yaml(path)
