import numpy as np
import pytest

from eventmc import presets
from eventmc.replication import warm_up


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile (or load from disk cache) every kernel once, outside timings
    warm_up()


@pytest.fixture(scope="session")
def analytic_problem():
    return presets.analytic_infinite_medium()


@pytest.fixture(scope="session")
def small_pincell():
    """Depleted-pincell preset scaled down for fast unit tests."""
    return presets.depleted_pincell(n_fuel_nuclides=12,
                                    n_moderator_nuclides=3,
                                    gridpoints=40, n_axial=8)


@pytest.fixture(scope="session")
def rng():
    return np.random.RandomState(20240811)
