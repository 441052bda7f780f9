import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import convroots as cr

SMALL_STEP = math.pi / 256
SMALL_XMAX = 32 * math.pi
DEFAULT_STEP = math.pi / 512
DEFAULT_XMAX = 128 * math.pi


@pytest.fixture(scope="session")
def ep_spec():
    return cr.make_exp_pareto(1.0, 2.0)


@pytest.fixture(scope="session")
def xi_spec():
    return cr.make_xi()


@pytest.fixture(scope="session")
def ep_small(ep_spec):
    return cr.to_grid(ep_spec, 1.0, SMALL_STEP, SMALL_XMAX)


@pytest.fixture(scope="session")
def xi_small(xi_spec):
    return cr.to_grid(xi_spec, 1.0, SMALL_STEP, SMALL_XMAX)


@pytest.fixture(scope="session")
def ep_default(ep_spec):
    return cr.to_grid(ep_spec, 1.0, DEFAULT_STEP, DEFAULT_XMAX)


@pytest.fixture(scope="session")
def xi_default(xi_spec):
    return cr.to_grid(xi_spec, 1.0, DEFAULT_STEP, DEFAULT_XMAX)


@pytest.fixture(scope="session")
def ep2_default(ep_default):
    return cr.conv_pow(ep_default, 2)


@pytest.fixture(scope="session")
def xi2_default(xi_default):
    return cr.conv_pow(xi_default, 2)
