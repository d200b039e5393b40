from __future__ import annotations

import numpy as np
import pytest

from poiseuille2d import Formulation
from poiseuille2d.spectral import build_discretization, build_operators


def pytest_addoption(parser):
    parser.addoption(
        '--runslow',
        action='store_true',
        default=False,
        help='run slow numerical tests',
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope='session')
def disc():
    """Small discretization for fast structural checks."""
    return build_discretization(2, 10, 1.0)


@pytest.fixture(scope='session')
def pressure_ops(disc):
    return build_operators(disc, 100.0, 0.25, dt=0.01, formulation=Formulation.PRESSURE)


@pytest.fixture(scope='session')
def flux_ops(disc):
    return build_operators(disc, 100.0, 0.25, dt=0.01, formulation=Formulation.FLUX)
