"""Application settings and constants"""

import os
from fractions import Fraction
from pathlib import Path

import yaml


def _load_yaml(name: str) -> dict:
    with open(Path(os.path.dirname(os.path.abspath(__file__))) / name, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f)


class Settings:
    """Application settings and constants"""

    # Get the directory containing this script
    CONFIG_DIR = Path(os.path.dirname(os.path.abspath(__file__)))
    APP_DIR = CONFIG_DIR.parent
    JOBS_DIR = CONFIG_DIR / 'jobs'

    APP_INFO = _load_yaml('app_info.yaml')['app_info']
    VERSION = APP_INFO['version']

    _app_settings = _load_yaml('app_settings.yaml')

    TOLERANCES = dict(_app_settings['tolerances'])
    OPTIMIZER_DEFAULTS = dict(_app_settings['optimizer'])
    LIMITS = dict(_app_settings['limits'])
    SCAN_DEFAULTS = dict(_app_settings['scan'])
    LOGGING = dict(_app_settings['logging'])

    # Family definitions; polytope vertices are stored as exact fractions
    _families_config = _load_yaml('families.yaml')
    FAMILIES = {
        name: {
            **entry,
            'vertices': None if entry.get('vertices') is None else [
                tuple(float(Fraction(v)) for v in vertex) for vertex in entry['vertices']
            ],
        }
        for name, entry in _families_config['families'].items()
    }

    # Closed-form boundary coefficient tables
    _boundaries_config = _load_yaml('boundaries.yaml')
    SURDS = {
        name: (s['rational'] + s['sqrt3'] * 3 ** 0.5) / s['denominator']
        for name, s in _boundaries_config['surds'].items()
    }
    BOUNDARIES = _boundaries_config['boundaries']

    # Dataset layout
    PARAMETER_COLUMNS = ['alpha', 'beta', 'gamma']
    CSV_COLUMNS = [
        'alpha', 'beta', 'gamma',
        'min_eig', 'ppt_min_eig',
        'witness_1', 'witness_2', 'witness_3',
        'octahedron', 'cylinder',
        'max_i_d', 'nu_star', 'cm2_lb',
        'error',
    ]
    BOUNDARY_COLUMNS = [
        'source_alpha', 'source_beta', 'source_gamma',
        'alpha', 'beta', 'gamma',
        'nu_star', 'max_i_d', 'on_positivity_boundary', 'violating',
        'sphere_residual', 'plane_residual',
        'error',
    ]
    OUTPUT_FORMATS = ('csv', 'json')

    VERIFY_SUITES = ('analytic-max', 'local-bound', 'horodecki', 'line-concurrence', 'sphere-fit')

    # Exit codes
    EXIT_OK = 0
    EXIT_VERIFICATION_FAILED = 1
    EXIT_INPUT_ERROR = 2
    EXIT_NUMERICAL_ABORT = 3
