"""Shared fixtures: expensive scattering computations are session-cached."""

import numpy as np
import pytest

from kdvist import make_catalog_potential, scatter_short_range
from kdvist import steplike as steplike_mod

K_GRID = np.linspace(0.005, 40.0, 4800)


@pytest.fixture(scope="session")
def k_grid():
    return K_GRID.copy()


@pytest.fixture(scope="session")
def soliton_data():
    p = make_catalog_potential("one_soliton", kappa=1.0, c=2.0)
    return steplike_mod.scattering_map(p, np.linspace(0.05, 20.0, 400))


@pytest.fixture(scope="session")
def two_soliton_data():
    p = make_catalog_potential("n_soliton", kappas=[1.0, 2.0], cs=[2.0, 12.0])
    return steplike_mod.scattering_map(p, np.linspace(0.05, 20.0, 400))


@pytest.fixture(scope="session")
def box_data():
    p = make_catalog_potential("box", V0=1.0, length=1.0)
    return steplike_mod.scattering_map(p, K_GRID)


@pytest.fixture(scope="session")
def pure_step_data():
    p = make_catalog_potential("pure_step", h=1.0)
    return steplike_mod.scattering_map(p, K_GRID)
