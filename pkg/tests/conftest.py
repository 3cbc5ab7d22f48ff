import json
from pathlib import Path

import numpy as np
import pytest

from bell_geometry.models.cglmp_model import MeasurementSettings
from bell_geometry.models.optimizer_model import OptimizerConfig, maximize_bell
from bell_geometry.models.state_model import bell_projector

DATA_DIR = Path(__file__).parent / 'data'
QUTRIT_SETTINGS_FILE = DATA_DIR / 'qutrit_cglmp_settings.json'


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def fast_config():
    """Few restarts and loose tolerances for qubit-scale optimizations"""
    return OptimizerConfig(restarts=4, max_iterations=4000, f_tolerance=1.0e-12, x_tolerance=1.0e-8, seed=7)


@pytest.fixture(scope="session")
def qutrit_optimum():
    """Optimized CGLMP settings for P_00 at d = 3, shared across the session"""
    cfg = OptimizerConfig(restarts=8, max_iterations=20000, f_tolerance=1.0e-12, x_tolerance=1.0e-9, seed=3)
    return maximize_bell(bell_projector(3, 0, 0), 3, cfg)


@pytest.fixture(scope="session")
def frozen_qutrit_settings(request):
    """The qutrit optimum as stored in tests/data.

    The file is written from `qutrit_optimum` when it is missing; once
    committed it pins the settings the regression checks run against.
    """
    if not QUTRIT_SETTINGS_FILE.exists():
        optimum = request.getfixturevalue('qutrit_optimum')
        DATA_DIR.mkdir(exist_ok=True)
        with open(QUTRIT_SETTINGS_FILE, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(optimum.settings.to_dict(), f, indent=2)
            f.write('\n')
    with open(QUTRIT_SETTINGS_FILE, 'r', encoding='utf-8') as f:
        return MeasurementSettings.from_dict(json.load(f))
