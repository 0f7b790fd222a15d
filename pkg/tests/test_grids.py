import numpy as np
import pytest

from degheat import GridError, TimeGrid


def test_graded_matches_formula_exactly():
    g = TimeGrid.graded(2.5, 17, 2.0)
    i = np.arange(18, dtype=float)
    assert np.array_equal(g.nodes, 2.5 * (i / 17) ** 2.0)
    assert g.nodes[0] == 0.0
    assert g.nodes[-1] == 2.5
    assert g.gamma == 2.0


def test_nodes_strictly_increasing_required():
    with pytest.raises(GridError, match="non-monotone"):
        TimeGrid(np.array([0.0, 0.5, 0.4]))
    with pytest.raises(GridError, match="t = 0"):
        TimeGrid(np.array([0.1, 0.5, 1.0]))
    with pytest.raises(GridError):
        TimeGrid.graded(1.0, 8, gamma=0.5)
    with pytest.raises(GridError):
        TimeGrid.graded(-1.0, 8)


def test_refined_keeps_coarse_nodes_bit_exact():
    g = TimeGrid.graded(1.0, 12, 2.0)
    fine = g.refined(4)
    assert fine.n_panels == 48
    assert np.array_equal(fine.nodes[::4], g.nodes)
    assert np.all(np.diff(fine.nodes) > 0)
    assert g.refined(1) is g


def test_nodes_immutable():
    g = TimeGrid.graded(1.0, 4)
    with pytest.raises(ValueError):
        g.nodes[0] = 1.0
