import numpy as np
import pytest

from twistedma import BicomplexGrid, ScalarField


def bandlimited_field(grid, rng, max_mode=2, n_terms=6, amp=1.0):
    """Random zero-mean field built from a few separable cosine modes."""
    vals = np.zeros(grid.shape)
    for _ in range(n_terms):
        ks = rng.integers(-max_mode, max_mode + 1, size=grid.real_dim)
        arg = rng.uniform(0.0, 2.0 * np.pi)
        for a, kk in enumerate(ks):
            sh = [1] * grid.real_dim
            sh[a] = grid.shape[a]
            arg = arg + kk * grid.axis_coords(a).reshape(sh)
        vals = vals + amp * rng.standard_normal() * np.cos(arg)
    vals = np.ascontiguousarray(np.broadcast_to(vals, grid.shape)).copy()
    vals -= vals.mean()
    return ScalarField(grid, vals)


def cos_axis_field(grid, axis, amplitude=1.0, mode=1):
    """amplitude * cos(mode * coordinate) along one axis."""
    coords = grid.axis_coords(axis)
    sh = [1] * grid.real_dim
    sh[axis] = len(coords)
    vals = amplitude * np.cos(mode * coords).reshape(sh)
    return ScalarField(grid, np.broadcast_to(vals, grid.shape).copy())


@pytest.fixture
def small_grid():
    return BicomplexGrid.regular(1, 1, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
