"""
Default configuration for quantum Lyapunov experiments on the 2-torus
"""

import math

CONFIG_VERSION = 1

MODEL_CONFIG = {
    'kind': 'free',
    'tau': 4 * math.pi,
    'resonant_m': None,
    'alpha': 1.0,
    'g': [[1, 0, 0.5, 0.0], [-1, 0, 0.5, 0.0], [0, 1, 0.5, 0.0], [0, -1, 0.5, 0.0]],
    'M': [[1, 1], [1, 2]],
    'boundary': 'absorbing',
    'cat_orientation': None
}

LATTICE_CONFIG = {
    'K': 32,
    'beta': [0.0, 0.0]
}

PERTURBATION_CONFIG = {
    'q0': [0.0, 0.0],
    'p0': None,
    'v1': [1.0, 0.0],
    'v2': [0.0, 0.0],
    'k_window': None,
    'fd_step': 1e-4,
    'fd_scheme': 'central'
}

RUN_CONFIG = {
    'N': 50,
    'leakage_budget': 1e-6,
    'thresholds': [10.0, 100.0],
    'horizon': 1,
    'fit_window': None,
    'truncation_probe': False
}

OUTPUT_CONFIG = {
    'dir': 'results',
    'plot': True,
    'record_wall_time': False
}

SPECTRAL_CONFIG = {
    'max_dim': 4096,
    'defect_tol': 1e-8,
    'n_max': 20,
    'stencil_step': 1e-3,
    'stencil': 'five_point',
    'check_steps': [0, 1, 5],
    'bins': 16
}

VISUALIZATION_CONFIG = {
    'figure_size': (8, 5),
    'palette': 'husl',
    'svg_hashsalt': 'quantum-lyapunov'
}

CHECK_CONFIG = {
    'K': 8,
    'random_vectors': 10,
    'seed': 1234
}
