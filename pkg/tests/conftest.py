import numpy as np
import pytest

from magelastica import Grid, ScalarField


@pytest.fixture(scope="session")
def grid400():
    return Grid(400)


@pytest.fixture(scope="session")
def grid200():
    return Grid(200)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def clamped_field(grid, rng, modes=4, amplitude=1.0, role="generic"):
    """Random smooth left-clamped field built from sine modes."""
    vals = np.zeros(grid.n_cells + 1)
    for k in range(modes):
        vals += rng.normal() * np.sin((2 * k + 1) * np.pi * grid.nodes / 2)
    vals *= amplitude / max(1.0, np.max(np.abs(vals)))
    vals[0] = 0.0
    return ScalarField(grid, vals, role)


def smooth_field(grid, rng, modes=4, amplitude=1.0, role="generic"):
    """Random smooth field, not clamped."""
    vals = rng.normal() * np.ones(grid.n_cells + 1)
    for k in range(1, modes + 1):
        vals += rng.normal() * np.cos(k * np.pi * grid.nodes)
    vals *= amplitude / max(1.0, np.max(np.abs(vals)))
    return ScalarField(grid, vals, role)
