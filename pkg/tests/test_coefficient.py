import numpy as np
import pytest

from degheat import Coefficient, GridError, TimeGrid


@pytest.fixture
def grid():
    return TimeGrid.graded(1.0, 32, 2.0)


def test_vanishes_at_origin(grid):
    vals = grid.nodes.copy()
    vals[0] = 0.1
    with pytest.raises(GridError, match="vanish"):
        Coefficient(grid, vals, 1.0)


def test_rejects_negative_samples(grid):
    vals = grid.nodes.copy()
    vals[5] = -1e-3
    with pytest.raises(GridError, match="negative"):
        Coefficient(grid, vals, 1.0)


@pytest.mark.parametrize("beta,c", [(1.0, 1.0), (2.0, 0.5), (3.0, 2.0)])
def test_power_anchor_exact_on_power_laws(grid, beta, c):
    a = Coefficient.from_callable(lambda t: c * t**beta, grid, beta)
    # below the first node the anchor reproduces the power law exactly
    t_small = grid.nodes[1] * np.array([0.1, 0.4, 0.9])
    assert np.allclose(a(t_small), c * t_small**beta, rtol=1e-13)
    # at nodes, exact samples
    assert np.allclose(a(grid.nodes), c * grid.nodes**beta, rtol=0, atol=0)


def test_weighted_values_and_distance(grid):
    a = Coefficient.from_callable(lambda t: 2.0 * t, grid, 1.0)
    b = Coefficient.from_callable(lambda t: 2.5 * t, grid, 1.0)
    assert np.allclose(a.weighted_values(), 2.0)
    assert a.weighted_sup_distance(b) == pytest.approx(0.5, abs=1e-14)
    assert a.weighted_sup_distance(a) == 0.0
