import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import beta as beta_fn

from degheat import (I1, QuadratureError, Theta, TimeGrid, singular_integral,
                     singular_rule)


def power_theta(grid, p, scale=1.0):
    """Clock theta = scale * t**p with exact slopes."""
    return Theta(grid, scale * grid.nodes**p, rates=scale * p * grid.nodes ** (p - 1.0))


class TestSingularIntegral:
    def test_linear_clock(self):
        g = TimeGrid.graded(1.0, 256, 2.0)
        th = Theta(g, g.nodes.copy(), rates=np.ones(g.nodes.size))
        ones = np.ones(g.nodes.size)
        for i in (32, 128, 256):
            t = g.nodes[i]
            assert singular_integral(ones, th, i) == pytest.approx(2.0 * math.sqrt(t),
                                                                   rel=1e-12)

    def test_quadratic_clock_constant_value(self):
        # integral of 1/sqrt((t^2 - tau^2)/2) is pi/sqrt(2) for every t
        g = TimeGrid.graded(1.0, 512, 2.0)
        th = power_theta(g, 2.0, 0.5)
        ones = np.ones(g.nodes.size)
        for i in (64, 300, 512):
            assert singular_integral(ones, th, i) == pytest.approx(
                math.pi / math.sqrt(2.0), rel=1e-12)

    def test_linear_integrand_cubic_clock(self):
        # reference value via the Euler integral of the first kind
        g = TimeGrid.graded(1.0, 512, 2.0)
        th = power_theta(g, 3.0, 1.0 / 3.0)
        exact = math.sqrt(3.0) * beta_fn(2.0 / 3.0, 0.5) / 3.0
        got = singular_integral(g.nodes, th, g.n_panels)
        assert got == pytest.approx(exact, abs=1e-8 * exact)

    @pytest.mark.parametrize("beta", [1.0, 2.0])
    @pytest.mark.parametrize("t_end", [0.1, 1.0])
    def test_change_of_variables(self, beta, t_end):
        g = TimeGrid.graded(t_end, 2048, 2.0)
        th = power_theta(g, beta + 1.0, 1.0 / (beta + 1.0))
        got = singular_integral(np.ones(g.nodes.size), th, g.n_panels)
        want = math.sqrt(beta + 1.0) * t_end ** (0.5 * (1.0 - beta)) * I1(beta)
        assert got == pytest.approx(want, rel=1e-6)

    def test_convergence_order(self):
        # smooth integrand, quadratic clock; reference from the finest rule
        def value(n):
            g = TimeGrid.graded(1.0, n, 2.0)
            th = power_theta(g, 2.0, 0.5)
            return singular_integral(np.cos(g.nodes), th, n)

        ref = value(8192)
        errs = [abs(value(n) - ref) for n in (64, 128, 256)]
        rate = math.log(errs[0] / errs[2]) / math.log(4.0)
        assert rate >= 1.5

    def test_weights_nonnegative(self):
        g = TimeGrid.graded(1.0, 64, 2.0)
        th = power_theta(g, 2.0, 0.5)
        rule = singular_rule(th, 64)
        assert np.all(rule.weights >= 0.0)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(0.0, 10.0), min_size=33, max_size=33))
    def test_monotone_in_integrand(self, samples):
        g = TimeGrid.graded(1.0, 32, 2.0)
        th = power_theta(g, 2.0, 0.5)
        assert singular_integral(np.asarray(samples), th, 32) >= 0.0

    def test_flat_clock_rejected(self):
        g = TimeGrid.graded(1.0, 16)
        flat = np.concatenate([g.nodes[:9], np.full(8, g.nodes[8])])
        th = Theta(g, flat)
        with pytest.raises(QuadratureError, match="flat"):
            singular_rule(th, 16)

    def test_bad_target_and_short_integrand(self):
        g = TimeGrid.graded(1.0, 16)
        th = Theta(g, g.nodes.copy(), rates=np.ones(17))
        with pytest.raises(QuadratureError):
            singular_rule(th, 0)
        rule = singular_rule(th, 10)
        with pytest.raises(QuadratureError):
            rule.apply(np.ones(5))


class TestI1:
    def test_arcsine_case(self):
        assert I1(1.0) == pytest.approx(math.pi / 2.0, abs=1e-12)

    def test_square_root_case(self):
        assert I1(0.0) == pytest.approx(2.0, abs=1e-12)

    def test_literal_value_beta_3(self):
        assert I1(3.0) == pytest.approx(1.3110287771, abs=1e-9)

    @pytest.mark.parametrize("beta", [1.0, 2.0, 3.0, 4.0, 7.5])
    def test_euler_integral_identity(self, beta):
        want = beta_fn(1.0 / (beta + 1.0), 0.5) / (beta + 1.0)
        assert I1(beta) == pytest.approx(want, rel=1e-10)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            I1(-0.5)
