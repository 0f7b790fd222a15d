import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad as scipy_quad

from degheat import (Coefficient, GreenParams, Theta, TimeGrid,
                     accumulate_theta, green, green_dx, green_dxi)

H = 1.0
P1 = GreenParams(1, H)
P2 = GreenParams(2, H)


class TestTheta:
    def test_zero_coefficient(self):
        g = TimeGrid.graded(1.0, 16)
        th = accumulate_theta(Coefficient(g, np.zeros(17), 1.0))
        assert np.array_equal(th.values, np.zeros(17))

    def test_linear_coefficient_exact(self):
        # trapezoid is exact for piecewise-linear samples
        g = TimeGrid.graded(1.0, 16)
        th = accumulate_theta(Coefficient.from_callable(lambda t: t, g, 1.0))
        assert np.allclose(th.values, g.nodes**2 / 2.0, rtol=0, atol=1e-16)

    def test_power_law_second_order(self):
        beta = 2.0
        errs = []
        for n in (64, 128, 256):
            g = TimeGrid.graded(1.0, n, 2.0)
            th = accumulate_theta(Coefficient.from_callable(lambda t: t**beta, g, beta))
            errs.append(np.max(np.abs(th.values - g.nodes ** (beta + 1) / (beta + 1))))
        rate = np.log2(errs[0] / errs[2]) / 2.0
        assert rate > 1.9

    def test_negative_coefficient_rejected(self):
        g = TimeGrid.graded(1.0, 8)
        bad = np.zeros(9)
        bad[3] = -1.0
        with pytest.raises(Exception):
            accumulate_theta(Coefficient(g, bad, 1.0))

    def test_nonmonotone_values_rejected(self):
        g = TimeGrid.graded(1.0, 8)
        vals = g.nodes.copy()
        vals[5] = vals[4] - 0.05
        with pytest.raises(Exception):
            Theta(g, vals)


class TestKernels:
    def test_dirichlet_vanishes_on_walls(self):
        xi = np.linspace(0.01, 0.99, 11)
        for d in (1e-6, 1e-3, 0.1, 5.0):
            assert np.max(np.abs(green(P1, 0.0, xi, d))) <= 1e-12
            assert np.max(np.abs(green(P1, H, xi, d))) <= 1e-12

    def test_neumann_derivative_vanishes_on_walls(self):
        x = np.linspace(0.05, 0.95, 7)
        for d in (1e-5, 0.02, 1.0):
            assert np.max(np.abs(green_dxi(P2, x, 0.0, d))) <= 1e-12
            assert np.max(np.abs(green_dxi(P2, x, H, d))) <= 1e-12

    def test_neumann_normalization(self):
        for d in (1e-6, 1e-3, 0.05, 2.0):
            for x in (0.0, H / 3, H):
                w = min(5.0 * np.sqrt(d), 0.4 * H)
                pts = sorted({0.0, max(0.0, x - w), x, min(H, x + w), H})
                total = 0.0
                for lo, hi in zip(pts[:-1], pts[1:]):
                    if hi > lo:
                        val, _ = scipy_quad(lambda xi: green(P2, x, xi, d), lo, hi,
                                            limit=200)
                        total += val
                assert total == pytest.approx(1.0, abs=1e-8)

    def test_large_separation_limit(self):
        val = green(P2, 0.3, 0.9, 100.0 * H**2)
        assert val == pytest.approx(1.0 / H, rel=1e-12)

    def test_derivative_identity(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(0, H, 10)
        xi = rng.uniform(0, H, 10)
        d = 10.0 ** rng.uniform(-6, 1, 10)
        X, XI, D = np.meshgrid(x, xi, d, indexing="ij")
        lhs = green_dx(P1, X, XI, D)
        rhs = -green_dxi(P2, X, XI, D)
        scale = np.maximum(np.abs(lhs), 1e-30)
        assert np.max(np.abs(lhs - rhs) / scale) <= 1e-10

    def test_dxi_matches_central_difference(self):
        x, xi, d = 0.4, 0.6, 0.02
        exact = green_dxi(P2, x, xi, d)
        errs = []
        for delta in (1e-3, 5e-4, 2.5e-4):
            fd = (green(P2, x, xi + delta, d) - green(P2, x, xi - delta, d)) / (2 * delta)
            errs.append(abs(fd - exact))
        rate = np.log(errs[0] / errs[2]) / np.log(4.0)
        assert rate > 1.9

    def test_truncation_converged(self):
        tight = GreenParams(2, H, truncation_tol=1e-32)
        for d in (1e-4, 0.1, 3.0):
            v = green(P2, 0.2, 0.7, d)
            w = green(tight, 0.2, 0.7, d)
            assert abs(v - w) <= 1e-15 * max(abs(v), 1.0)

    def test_coincident_clock_rejected(self):
        with pytest.raises(ValueError):
            green(P2, 0.1, 0.2, 0.0)
        with pytest.raises(ValueError):
            green(P1, 0.1, 0.2, -1.0)

    @settings(max_examples=40, deadline=None)
    @given(
        x=st.floats(0.0, H),
        xi=st.floats(0.0, H),
        d=st.floats(1e-8, 10.0),
        k=st.sampled_from([1, 2]),
    )
    def test_symmetry(self, x, xi, d, k):
        p = GreenParams(k, H)
        a = green(p, x, xi, d)
        b = green(p, xi, x, d)
        assert abs(a - b) <= 1e-14 * max(abs(a), 1.0)
