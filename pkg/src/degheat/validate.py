"""Checks of the solvability hypotheses and the degeneration-exponent fit.

Strict sign conditions are tested at the grid nodes with a configurable
margin (default 0); the limit conditions at t -> 0 are realized as log-log
regressions over an early-time window, since only samples are available.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from .errors import DegheatError
from .problem import ConditionCheck, HypothesisReport, ProblemData

if TYPE_CHECKING:  # pragma: no cover
    from .coefficient import Coefficient

SLOPE_TOL = 0.1


def _power_fit(tvals: np.ndarray, yvals: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and prefactor of y ~ c * t**p."""
    slope, intercept = np.polyfit(np.log(tvals), np.log(yvals), 1)
    return float(slope), float(np.exp(intercept))


def fit_window(t: np.ndarray, hi_frac: float = 0.01, min_nodes: int = 6) -> np.ndarray:
    """Indices of the earliest-time fit window (t <= hi_frac * T).

    Limit conditions are about t -> 0, so the window hugs the origin as
    closely as the sampling allows; it widens (up to tenfold) only when the
    grid is too coarse to populate it.
    """
    T = t[-1]
    idx = np.nonzero((t > 0.0) & (t <= hi_frac * T))[0]
    if idx.size < min_nodes:
        idx = np.nonzero((t > 0.0) & (t <= 10.0 * hi_frac * T))[0]
    if idx.size < min_nodes:
        idx = np.nonzero(t > 0.0)[0][:min_nodes]
    return idx


def check_hypotheses(problem: ProblemData, margin_eps: float = 0.0) -> HypothesisReport:
    """Evaluate every solvability condition; failures are flags, never raises."""
    x = problem.x_grid
    t = problem.t_grid
    checks: list[ConditionCheck] = []

    def slack(arr) -> float:
        return 1e-12 * max(float(np.max(np.abs(arr))), 1.0)

    def add_sign(name, arr, coords, strict, note=""):
        k = int(np.argmin(arr))
        m = float(arr[k])
        ok = m > margin_eps if strict else m >= -slack(arr)
        checks.append(ConditionCheck(name, bool(ok), m, float(coords[k]), note))

    add_sign("initial_slope_nonneg", problem.phi_prime, x, strict=False,
             note="phi'(x) >= 0 on [0, h]")
    add_sign("left_drive_positive", problem.f[0, :] - problem.mu1_prime, t, strict=True,
             note="f(0, t) - mu1'(t) > 0 on [0, T]")
    add_sign("right_drive_nonneg", problem.mu2_prime - problem.f[-1, :], t, strict=True
             if margin_eps > 0 else False,
             note="mu2'(t) - f(h, t) >= 0 on [0, T]")
    add_sign("flux_datum_positive", problem.mu3[1:], t[1:], strict=True,
             note="mu3(t) > 0 on (0, T]")

    target = 0.5 * (problem.beta + 1.0)
    idx = fit_window(t)
    if np.any(problem.mu3[idx] <= 0.0):
        checks.append(ConditionCheck(
            "flux_datum_scaling", False, -np.inf, float(t[idx[0]]),
            "mu3 must be positive in the early-time window"))
    else:
        slope, prefactor = _power_fit(t[idx], problem.mu3[idx])
        ok = abs(slope - target) <= SLOPE_TOL and prefactor > 0.0
        checks.append(ConditionCheck(
            "flux_datum_scaling", bool(ok), SLOPE_TOL - abs(slope - target), None,
            f"log-log slope {slope:.3f} vs (beta+1)/2 = {target:.3f}"))

    fx = problem.f_x
    kmin = np.unravel_index(int(np.argmin(fx)), fx.shape)
    mfx = float(fx[kmin])
    checks.append(ConditionCheck("source_slope_nonneg", bool(mfx >= -slack(fx)), mfx,
                                 float(x[kmin[0]]), "f_x >= 0 on the closed domain"))

    scale = max(float(np.max(np.abs(problem.phi))), 1.0)
    for name, dev, loc in (
        ("corner_match_left", abs(problem.phi[0] - problem.mu1[0]), 0.0),
        ("corner_match_right", abs(problem.phi[-1] - problem.mu2[0]), problem.h),
    ):
        tol = 1e-10 * scale
        checks.append(ConditionCheck(name, bool(dev <= tol), tol - float(dev), loc,
                                     "initial and boundary data agree at the corner"))

    tables = (problem.phi_prime, problem.phi_second, problem.mu1_prime,
              problem.mu2_prime, problem.f_x, problem.f_xx)
    finite = all(np.isfinite(tab).all() for tab in tables)
    worst = max(float(np.max(np.abs(tab))) for tab in tables)
    checks.append(ConditionCheck(
        "smoothness_bounded", bool(finite), 0.0 if finite else -np.inf, None,
        f"finite-difference derivatives bounded by {worst:.3g}; a once-differentiable "
        "(phi', f_x) subset would suffice for a relaxed theory"))

    return HypothesisReport(tuple(checks))


def estimate_beta(a: "Coefficient") -> float:
    """Least-squares exponent of the coefficient over the first decade of time.

    Exact (to rounding) on pure power laws c * t**p for any c > 0.
    """
    t = a.grid.nodes
    T = t[-1]
    idx = np.nonzero((t > 0.0) & (t <= T / 10.0))[0]
    if idx.size < 4:
        raise DegheatError("fewer than 4 usable nodes in (0, T/10] for the exponent fit")
    vals = a.values[idx]
    if np.any(vals <= 0.0):
        raise DegheatError("nonpositive coefficient values in the exponent fit window")
    slope, _ = _power_fit(t[idx], vals)
    return slope
