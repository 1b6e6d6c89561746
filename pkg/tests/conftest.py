import numpy as np
import pytest

import soliton_stability as ss


@pytest.fixture(scope="session")
def structure():
    return ss.standard_structure(2, [1.0, 0.0, 0.0, 0.0])


@pytest.fixture(scope="session")
def grim_reaper():
    return ss.grim_reaper_cylinder()


@pytest.fixture(scope="session")
def flat_plane():
    return ss.flat_lagrangian_plane()


@pytest.fixture(scope="session")
def perturbed():
    return ss.perturbed_grim_reaper(0.05)


@pytest.fixture(scope="session")
def gr_support(grim_reaper):
    return ss.default_support_box(grim_reaper.domain)


@pytest.fixture(scope="session")
def gr_geometry_small(grim_reaper, structure, gr_support):
    """Coarse grid geometry for fast unit tests (quadrature is still spectral)."""
    grid = ss.tensor_rule(gr_support, cells=10, points_per_cell=6)
    return ss.grid_geometry(grim_reaper, structure, grid)


@pytest.fixture(scope="session")
def fp_geometry_small(flat_plane, structure):
    support = ss.default_support_box(flat_plane.domain)
    grid = ss.tensor_rule(support, cells=10, points_per_cell=6)
    return ss.grid_geometry(flat_plane, structure, grid)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
