"""Fixed-point recovery of the vanishing diffusivity from the flux datum.

The unknown solves a(t) = mu3(t) / u_x(0, t; a).  Damped successive
substitution converges on data that satisfy the sign hypotheses; iterates are
confined to the a-priori upper band H_max(t)^2 * t^beta derived from the
data, which doubles as a runtime safeguard and a diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficient import Coefficient
from .direct import flux_left
from .errors import DegheatError, FluxSignError, HypothesisError
from .greens import SQRT_PI, Theta
from .grids import TimeGrid, _frozen_array
from .problem import ProblemData
from .quad import I1, singular_rule
from .validate import SLOPE_TOL, _power_fit, check_hypotheses, fit_window

WEIGHT_FLOOR = 1e-6
WEIGHT_CEIL = 1e6
BAND_SLACK = 1e-6


@dataclass
class ConvergenceLog:
    """Per-iteration weighted sup-norm changes, relaxation factors, band excesses."""

    weighted_changes: list[float] = field(default_factory=list)
    relaxations: list[float] = field(default_factory=list)
    band_excess: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    residual: float = math.nan

    def max_band_excess(self) -> float:
        return max(self.band_excess, default=0.0)


@dataclass(frozen=True, eq=False)
class BandProfile:
    """Two-sided envelope A0 * t^beta <= a(t) <= A1 * t^beta from the data.

    The upper profile H_max(t)^2 * t^beta is rigorous; the lower one replaces
    a non-constructive constant by a data-driven surrogate and is diagnostic
    only, never a hard constraint.
    """

    grid: TimeGrid
    upper: np.ndarray
    lower: np.ndarray
    H1: float
    M1: float
    H: np.ndarray
    h_limit_value: float
    c6_surrogate: float

    def __post_init__(self):
        object.__setattr__(self, "upper", _frozen_array(self.upper))
        object.__setattr__(self, "lower", _frozen_array(self.lower))
        object.__setattr__(self, "H", _frozen_array(self.H))


def _power_theta(problem: ProblemData) -> Theta:
    t = problem.t_grid
    p = problem.beta + 1.0
    return Theta(problem.tgrid, t**p, rates=p * t ** problem.beta)


def _left_drive(problem: ProblemData) -> np.ndarray:
    g = problem.f[0, :] - problem.mu1_prime
    if np.any(g <= 0.0):
        k = int(np.argmax(g <= 0.0))
        raise HypothesisError(
            f"f(0, t) - mu1'(t) is {g[k]:.3g} <= 0 at t = {problem.t_grid[k]:.6g}"
        )
    return g


def compute_H(problem: ProblemData, t_index: int) -> float:
    """Data ratio H(t) whose running maximum squares into the upper band.

    H(t) = sqrt(pi) mu3(t) / (sqrt(beta+1) t^beta J(t)) with J the integral of
    (f(0,tau) - mu1'(tau)) / sqrt(t^(beta+1) - tau^(beta+1)).
    """
    i = int(t_index)
    if i < 1:
        raise ValueError("H is defined at positive nodes; use h_limit for t -> 0")
    g = _left_drive(problem)
    theta_p = _power_theta(problem)
    J = singular_rule(theta_p, i).apply(g[: i + 1])
    t = problem.t_grid[i]
    return SQRT_PI * problem.mu3[i] / (
        math.sqrt(problem.beta + 1.0) * t**problem.beta * J
    )


def _h_profile(problem: ProblemData) -> np.ndarray:
    g = _left_drive(problem)
    theta_p = _power_theta(problem)
    t = problem.t_grid
    H = np.full(t.size, np.nan)
    for i in range(1, t.size):
        J = singular_rule(theta_p, i).apply(g[: i + 1])
        H[i] = SQRT_PI * problem.mu3[i] / (
            math.sqrt(problem.beta + 1.0) * t[i] ** problem.beta * J
        )
    return H


def h_limit(problem: ProblemData) -> float:
    """Closed-form limit of H(t) as t -> 0, from the fitted flux-datum prefactor."""
    t = problem.t_grid
    target = 0.5 * (problem.beta + 1.0)
    idx = fit_window(t)
    if np.any(problem.mu3[idx] <= 0.0):
        raise HypothesisError("limit hypothesis violated: flux datum not positive near 0")
    slope, _ = _power_fit(t[idx], problem.mu3[idx])
    if abs(slope - target) > SLOPE_TOL:
        raise HypothesisError(
            f"limit hypothesis violated: fitted flux-datum exponent {slope:.3f} "
            f"differs from (beta+1)/2 = {target:.3f} by more than {SLOPE_TOL}"
        )
    M = float(np.exp(np.mean(np.log(problem.mu3[idx]) - target * np.log(t[idx]))))
    drive0 = float(problem.f[0, 0] - problem.mu1_prime[0])
    if drive0 <= 0.0:
        raise HypothesisError("limit hypothesis violated: f(0,0) - mu1'(0) <= 0")
    return SQRT_PI * M / (math.sqrt(problem.beta + 1.0) * drive0 * I1(problem.beta))


def apriori_band(problem: ProblemData) -> BandProfile:
    """Upper and (diagnostic) lower envelopes for any admissible coefficient."""
    t = problem.t_grid
    beta = problem.beta
    H = _h_profile(problem)
    hl = h_limit(problem)
    run_max = np.maximum.accumulate(np.concatenate([[hl], H[1:]]))
    run_min = np.minimum.accumulate(np.concatenate([[hl], H[1:]]))
    tb = t**beta
    upper = np.concatenate([[0.0], run_max[1:] ** 2 * tb[1:]])
    g = _left_drive(problem)
    half = 0.5 * (beta + 1.0)
    M1 = float(np.max(problem.mu3[1:] / t[1:] ** half))
    H1 = SQRT_PI * M1 / (math.sqrt(beta + 1.0) * float(np.min(g)) * I1(beta))

    # surrogate for the non-constructive lower-band constant: bound the
    # bounded (non-singular) flux terms along the upper envelope
    reference = Coefficient(problem.tgrid, upper, beta)
    _, terms = flux_left(problem, reference, return_terms=True)
    bounded = (terms["initial_layer"] + terms["right_layer"] + terms["volume"]
               + (terms["left_layer"] - terms["left_layer_free"]))
    c4 = float(np.nanmax(bounded))
    c5 = c4 * H1
    c6 = c5 * float(np.max(t[1:] ** half * H[1:] / problem.mu3[1:]))
    lower = np.concatenate(
        [[0.0], run_min[1:] ** 2 * tb[1:] / (1.0 + c6 * t[1:] ** (0.5 * (beta - 1.0))) ** 2]
    )
    return BandProfile(
        grid=problem.tgrid,
        upper=upper,
        lower=lower,
        H1=float(H1),
        M1=M1,
        H=np.concatenate([[hl], H[1:]]),
        h_limit_value=hl,
        c6_surrogate=c6,
    )


def picard_step(problem: ProblemData, a: Coefficient) -> Coefficient:
    """One application of the fixed-point map: mu3 / flux, pinned to 0 at t = 0."""
    mu3 = problem.mu3
    bad = np.nonzero(mu3[1:] <= 0.0)[0]
    if bad.size:
        raise HypothesisError(
            f"flux datum mu3 is nonpositive at node {bad[0] + 1} "
            f"(t = {problem.t_grid[bad[0] + 1]:.6g})"
        )
    flux = flux_left(problem, a)
    neg = np.nonzero(flux.values[1:] <= 0.0)[0]
    if neg.size:
        raise FluxSignError(int(neg[0] + 1), float(flux.values[neg[0] + 1]))
    vals = np.zeros_like(mu3)
    vals[1:] = mu3[1:] / flux.values[1:]
    return Coefficient(a.grid, vals, problem.beta)


def _default_start(problem: ProblemData) -> Coefficient:
    t = problem.t_grid
    try:
        w0 = min(max(h_limit(problem) ** 2, WEIGHT_FLOOR), WEIGHT_CEIL)
    except DegheatError:
        w0 = 1.0  # flat-drive fixtures: any admissible start maps onto mu3/flux
    vals = w0 * t**problem.beta
    return Coefficient(problem.tgrid, vals, problem.beta)


def picard_solve(
    problem: ProblemData,
    *,
    relaxation: float = 0.5,
    tolerance: float = 1e-8,
    max_iterations: int = 200,
    force: bool = False,
    initial: Coefficient | None = None,
    clamp_to_band: bool = True,
) -> tuple[Coefficient, ConvergenceLog]:
    """Damped successive substitution a <- (1-w) a + w mu3/flux(a).

    The first step is taken undamped (there is no previous direction to damp
    against), so constant-flux fixtures land on the answer immediately.  The
    relaxation factor halves whenever the weighted change alternates in sign
    for three consecutive iterations.  Stops when the weighted sup-norm
    change drops below `tolerance`; a non-converged run returns with
    log.converged False for diagnosis.
    """
    if not 0.0 < relaxation <= 1.0:
        raise ValueError("relaxation must lie in (0, 1]")
    if tolerance <= 0.0:
        raise ValueError("tolerance must be positive")
    if not force:
        report = check_hypotheses(problem)
        if not report.passed:
            names = ", ".join(c.name for c in report.failures())
            raise HypothesisError(f"data fail the solvability hypotheses: {names}",
                                  report)
    band = None
    try:
        band = apriori_band(problem)
    except DegheatError:
        if not force:
            raise
    t = problem.t_grid
    tb = t[1:] ** problem.beta
    a = initial if initial is not None else _default_start(problem)
    omega = relaxation
    log = ConvergenceLog()
    signs: list[float] = []

    for n in range(1, max_iterations + 1):
        image = picard_step(problem, a)
        w = 1.0 if n == 1 else omega
        new_vals = (1.0 - w) * a.values + w * image.values
        excess = 0.0
        if band is not None:
            over = new_vals - band.upper
            excess = float(max(np.max(over), 0.0))
            if clamp_to_band:
                np.minimum(new_vals, band.upper + BAND_SLACK, out=new_vals)
        delta = (new_vals[1:] - a.values[1:]) / tb
        change = float(np.max(np.abs(delta)))
        log.weighted_changes.append(change)
        log.relaxations.append(w)
        log.band_excess.append(excess)
        log.iterations = n
        s = float(np.sign(np.mean(delta)))
        signs.append(s)
        if len(signs) >= 3 and 0.0 not in signs[-3:] and \
                signs[-1] == -signs[-2] and signs[-2] == -signs[-3]:
            omega = max(omega / 2.0, 1.0 / 64.0)
            signs.clear()
        a = Coefficient(a.grid, new_vals, problem.beta)
        if change < tolerance:
            log.converged = True
            break

    flux = flux_left(problem, a)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(a.values[1:] * flux.values[1:] - problem.mu3[1:])
        pos = problem.mu3[1:] > 0.0
        rel = np.where(pos, rel / np.where(pos, problem.mu3[1:], 1.0), rel)
    log.residual = float(np.max(rel))
    return a, log


def uniqueness_probe(
    problem: ProblemData,
    n_starts: int = 4,
    spread: tuple[float, float] = (0.25, 4.0),
    seed: int | None = None,
    **solver_options,
) -> float:
    """Max pairwise weighted distance of fixed points reached from spread starts.

    Starts are multiples of the default initialization, clamped into the
    a-priori band.  A tiny return value is the operational reflection of the
    uniqueness theory; it is evidence, not proof.
    """
    if n_starts < 2:
        raise ValueError("need at least two starts")
    band = apriori_band(problem)
    base = _default_start(problem)
    factors = np.geomspace(spread[0], spread[1], n_starts)
    if seed is not None:
        factors = factors[np.random.default_rng(seed).permutation(n_starts)]
    limits: list[Coefficient] = []
    for k, fac in enumerate(factors):
        vals = np.minimum(fac * base.values, band.upper)
        start = Coefficient(problem.tgrid, vals, problem.beta)
        coef, lg = picard_solve(problem, initial=start, **solver_options)
        if not lg.converged:
            raise DegheatError(
                f"probe start {k} (factor {fac:.3g}) failed to converge in "
                f"{lg.iterations} iterations (last change {lg.weighted_changes[-1]:.3g})"
            )
        limits.append(coef)
    dist = 0.0
    for p in range(len(limits)):
        for r in range(p + 1, len(limits)):
            dist = max(dist, limits[p].weighted_sup_distance(limits[r]))
    return dist
