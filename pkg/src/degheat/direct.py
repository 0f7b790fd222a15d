"""Green-function evaluation of the direct problem.

The temperature field is a sum of an initial-data layer, two boundary
single-layers and a source volume potential; the boundary flux at x = 0 is
the same structure driven by the differentiated data.  Space integrals of
tabulated (piecewise-linear) data against the kernels are exact per panel:
Gaussian image form (error functions) when the clock separation
q = theta(t) - theta(tau) is small, eigenfunction form (a few sine/cosine
moments) when it is large.  Time integrals run over panel segments with a
geometric tail toward the evaluation time; the weakly singular boundary
terms of the flux go through the product-integration rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, erfc

from .coefficient import Coefficient
from .errors import DirectSolverError, GridError
from .greens import SQRT_PI, Theta, _n_images, accumulate_theta
from .grids import TimeGrid, _frozen_array
from .problem import ProblemData
from .quad import _gauss01, singular_rule

_TAIL_DEPTH = 14
_STEEP_RATIO = 4.0
_Q_SPLIT = 0.01  # of h^2: image form below, eigenfunction form above
_K_MODES = 20    # modes kept in the eigenfunction form at the split


@dataclass(frozen=True, eq=False)
class TemperatureField:
    """u(x_j, t_i) samples; matches the boundary data on the parabolic boundary."""

    x: np.ndarray
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen_array(self.x))
        object.__setattr__(self, "values", _frozen_array(self.values))


@dataclass(frozen=True, eq=False)
class FluxTrace:
    """u_x(0, t_i) samples.  The t = 0 node is excluded (stored as nan): the
    flux may blow up like t**((1-beta)/2) at the degenerate origin."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if not np.isfinite(values[1:]).all():
            raise DirectSolverError("non-finite flux at a positive time node")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def _check_alignment(a: Coefficient, problem: ProblemData) -> None:
    if a.grid.nodes.size != problem.t_grid.size or not np.allclose(
        a.grid.nodes, problem.t_grid, rtol=0.0, atol=1e-12 * problem.T
    ):
        raise GridError("coefficient grid must coincide with the problem t-grid")


# -- exact panel integrals against the Gaussian image kernel -----------------


def _gauss_layer(xs: np.ndarray, vals: np.ndarray, c: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Integral over [0, h] of v(xi) * exp(-(xi-c)^2/(4 d)) / (2 sqrt(pi d)).

    v is the piecewise-linear interpolant of `vals` on the edges `xs`; exact
    per panel via the error function.  `vals` is one row shared by the batch
    or one row per batch entry; `c`, `d` are batch vectors.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))[:, None]
    d = np.atleast_1d(np.asarray(d, dtype=float))[:, None]
    z = (xs[None, :] - c) / (2.0 * np.sqrt(d))
    E = erf(z)
    W = -np.sqrt(d / np.pi) * np.exp(-z * z)
    if vals.ndim == 1:
        vals = vals[None, :]
    slope = (vals[:, 1:] - vals[:, :-1]) / np.diff(xs)[None, :]
    alpha = vals[:, :-1] + slope * (c - xs[:-1][None, :])
    panel = 0.5 * alpha * (E[:, 1:] - E[:, :-1]) + slope * (W[:, 1:] - W[:, :-1])
    return panel.sum(axis=1)


def _center_reach(c: float, h: float) -> float:
    """Distance from an image center to the domain [0, h]."""
    return max(0.0, -c, c - h)


def _masked_layer_sum(xs, vals, centers, d, h, tol=1e-16) -> np.ndarray:
    """Sum of signed Gaussian-layer integrals over image centers, skipping
    rows whose clock separation keeps an image from reaching the domain."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    out = np.zeros(d.shape)
    log_tol = 4.0 * math.log(1.0 / tol)
    for c, sign in centers:
        reach = _center_reach(c, h)
        if reach == 0.0:
            out += sign * _gauss_layer(xs, vals, np.full(d.shape, c), d)
            continue
        mask = d > reach * reach / log_tol
        if not mask.any():
            continue
        rows = vals if vals.ndim == 1 else vals[mask]
        out[mask] += sign * _gauss_layer(xs, rows, np.full(int(mask.sum()), c), d[mask])
    return out


def _neumann_centers(h: float, nmax: int):
    return [(2.0 * n * h, 2.0) for n in range(-nmax, nmax + 1)]


def _dirichlet_centers(x: float, h: float, nmax: int):
    centers = []
    for n in range(-nmax, nmax + 1):
        cp = x + 2.0 * n * h
        centers.append((cp, 1.0))
        centers.append((-cp, -1.0))
    return centers


def _neumann_layer_at_left(xs, vals, d, h, tol=1e-16) -> np.ndarray:
    """Integral of v against the insulated-wall kernel seen from x = 0."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    nmax = _n_images(h, float(np.max(d, initial=0.0)), tol)
    return _masked_layer_sum(xs, vals, _neumann_centers(h, nmax), d, h, tol)


def _dirichlet_layer(xs, vals, x, d, h, tol=1e-16) -> np.ndarray:
    """Integral of v against the fixed-temperature kernel at field point x."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    nmax = _n_images(h, float(np.max(d, initial=0.0)), tol)
    return _masked_layer_sum(xs, vals, _dirichlet_centers(x, h, nmax), d, h, tol)


# -- eigenfunction form for well-separated clocks ----------------------------


class _VolumeMoments:
    """Sine/cosine moments of the time-columns of a tabulated source table.

    The moments are linear in the data, so the moment of a time-interpolated
    column is the interpolation of the nodal moments; this makes the
    eigenfunction form of the inner space integrals O(K) per evaluation.
    """

    def __init__(self, xs: np.ndarray, table: np.ndarray, t_nodes: np.ndarray, h: float,
                 kmax: int = _K_MODES):
        self.h = h
        self.kmax = kmax
        self.t_nodes = t_nodes
        om = np.arange(1, kmax + 1) * math.pi / h
        s = np.sin(om[:, None] * xs[None, :])
        c = np.cos(om[:, None] * xs[None, :])
        dx = np.diff(xs)
        slope = np.diff(table, axis=0) / dx[:, None]          # (m, nt)
        vp, vr = table[:-1, :], table[1:, :]
        sp, sr = s[:, :-1], s[:, 1:]
        cp, cr = c[:, :-1], c[:, 1:]
        # all shapes (K, m, nt) contracted over panels m
        self.cos_m = np.einsum(
            "km,mn->kn",
            sr / om[:, None], vr) - np.einsum("km,mn->kn", sp / om[:, None], vp)
        self.cos_m += np.einsum("km,mn->kn", (cr - cp) / om[:, None] ** 2, slope)
        self.sin_m = np.einsum(
            "km,mn->kn",
            cp / om[:, None], vp) - np.einsum("km,mn->kn", cr / om[:, None], vr)
        self.sin_m += np.einsum("km,mn->kn", (sr - sp) / om[:, None] ** 2, slope)
        self.mass = np.trapezoid(table, xs, axis=0)
        self.om2 = om**2

    def interp(self, tau: np.ndarray):
        t = self.t_nodes
        j = np.clip(np.searchsorted(t, tau, side="right") - 1, 0, t.size - 2)
        w = (tau - t[j]) / (t[j + 1] - t[j])
        cos_tau = (1.0 - w) * self.cos_m[:, j] + w * self.cos_m[:, j + 1]
        sin_tau = (1.0 - w) * self.sin_m[:, j] + w * self.sin_m[:, j + 1]
        mass_tau = (1.0 - w) * self.mass[j] + w * self.mass[j + 1]
        return mass_tau, cos_tau, sin_tau

    def decay(self, q: np.ndarray) -> np.ndarray:
        return np.exp(-self.om2[:, None] * q[None, :])


def _interp_columns(F: np.ndarray, t_nodes: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Linear-in-time interpolation of the columns of F (rows = x samples)."""
    j = np.clip(np.searchsorted(t_nodes, tau, side="right") - 1, 0, t_nodes.size - 2)
    w = (tau - t_nodes[j]) / (t_nodes[j + 1] - t_nodes[j])
    return (1.0 - w)[:, None] * F.T[j] + w[:, None] * F.T[j + 1]


# -- single-layer primitives (running kernel mass in the clock variable) -----


def _erfc_signed(c: float, q: np.ndarray) -> np.ndarray:
    return math.copysign(1.0, c) * erfc(abs(c) / (2.0 * np.sqrt(q)))


def _offset_primitive_sum(offsets, q: np.ndarray, tol: float) -> np.ndarray:
    out = np.zeros_like(q)
    log_tol = 4.0 * math.log(1.0 / tol)
    for c in offsets:
        if c == 0.0:
            continue
        mask = q > c * c / log_tol
        if mask.any():
            out[mask] += _erfc_signed(c, q[mask])
    return out


def _wall_primitive_even(x: float, q: np.ndarray, h: float, tol=1e-16) -> np.ndarray:
    """Running mass of the left-wall single layer seen at x (offsets x + 2nh)."""
    q = np.asarray(q, dtype=float)
    out = np.empty_like(q)
    small = q <= _Q_SPLIT * h * h
    if small.any():
        qs = q[small]
        nmax = _n_images(h, float(np.max(qs)), tol)
        offsets = [x + 2.0 * n * h for n in range(-nmax, nmax + 1)]
        out[small] = _offset_primitive_sum(offsets, qs, tol)
    if (~small).any():
        qb = q[~small]
        k = np.arange(1, _K_MODES + 1)
        phase = np.sin(k * math.pi * x / h) / k
        decay = np.exp(-(k[:, None] * math.pi / h) ** 2 * qb[None, :])
        out[~small] = (1.0 - x / h) - (2.0 / math.pi) * (phase @ decay)
    return out


def _wall_primitive_odd(x: float, q: np.ndarray, h: float, tol=1e-16) -> np.ndarray:
    """Running mass of the right-wall single layer seen at x (offsets x + (2n+1)h)."""
    q = np.asarray(q, dtype=float)
    out = np.empty_like(q)
    small = q <= _Q_SPLIT * h * h
    if small.any():
        qs = q[small]
        nmax = _n_images(h, float(np.max(qs)), tol)
        offsets = [x + (2.0 * n + 1.0) * h for n in range(-nmax - 1, nmax + 1)]
        out[small] = _offset_primitive_sum(offsets, qs, tol)
    if (~small).any():
        qb = q[~small]
        k = np.arange(1, _K_MODES + 1)
        phase = (-1.0) ** k * np.sin(k * math.pi * x / h) / k
        decay = np.exp(-(k[:, None] * math.pi / h) ** 2 * qb[None, :])
        out[~small] = -x / h - (2.0 / math.pi) * (phase @ decay)
    return out


# -- time-segment machinery ---------------------------------------------------


def _segment_table(theta: Theta, targets: np.ndarray):
    """Panel segments covering [0, t_i] per target i, refined toward t_i.

    Panels over which the clock separation shrinks by more than a fixed
    ratio, and the panel adjacent to the target, are split geometrically so
    the boundary-layer transition of the kernels is always resolved.
    Returns (target_index, lo, hi) arrays over all segments.
    """
    nodes = theta.grid.nodes
    v = theta.values
    frac = 0.25 ** np.arange(1, _TAIL_DEPTH + 1)

    i_pair = np.concatenate([np.full(i, i) for i in targets])
    j_pair = np.concatenate([np.arange(i) for i in targets])
    q_lo = v[i_pair] - v[j_pair]
    q_hi = v[i_pair] - v[j_pair + 1]
    with np.errstate(divide="ignore", over="ignore"):
        ratio = q_lo / np.maximum(q_hi, 1e-300)
    split = (j_pair == i_pair - 1) | (ratio > _STEEP_RATIO)

    plain = ~split
    idx = [i_pair[plain]]
    los = [nodes[j_pair[plain]]]
    his = [nodes[j_pair[plain] + 1]]
    for i, j, r in zip(i_pair[split], j_pair[split], ratio[split]):
        lo, hi = nodes[j], nodes[j + 1]
        if j == i - 1:
            tail = frac
        else:
            k = min(_TAIL_DEPTH, max(1, int(math.ceil(math.log(min(r, 1e300), 4.0)))))
            tail = frac[:k]
        breaks = np.concatenate([[lo], hi - (hi - lo) * tail, [hi]])
        idx.append(np.full(breaks.size - 1, i))
        los.append(breaks[:-1])
        his.append(breaks[1:])
    return (
        np.concatenate(idx).astype(int),
        np.concatenate(los),
        np.concatenate(his),
    )


def _gl_segments(lo: np.ndarray, hi: np.ndarray, n: int = 4):
    xg, wg = _gauss01(n)
    tau = lo[:, None] + (hi - lo)[:, None] * xg[None, :]
    w = (hi - lo)[:, None] * wg[None, :]
    return tau.ravel(), w.ravel()


def _clock_diffs(theta: Theta, seg_i: np.ndarray, tau: np.ndarray, per_seg: int) -> np.ndarray:
    i_rep = np.repeat(seg_i, per_seg)
    q = np.empty_like(tau)
    for i in np.unique(seg_i):
        m = i_rep == i
        q[m] = theta.diff_from_node(int(i), tau[m])
    return np.maximum(q, 1e-300)


# -- same-wall/opposite-wall image factors for the singular rule -------------


def _even_factor(q: np.ndarray, h: float) -> np.ndarray:
    """Same-wall kernel in units of the free one: 1 + 2 sum exp(-n^2 h^2 / q)."""
    out = np.ones_like(q)
    qmax = float(np.max(q, initial=0.0))
    if qmax <= 0.0:
        return out
    nmax = int(math.ceil(math.sqrt(42.0 * qmax) / h))
    pos = q > 0.0
    for n in range(1, nmax + 1):
        out[pos] += 2.0 * np.exp(-(n * h) ** 2 / q[pos])
    return out


def _odd_factor(q: np.ndarray, h: float) -> np.ndarray:
    """Opposite-wall kernel in units of the free one: 2 sum exp(-(2k+1)^2 h^2/(4q))."""
    out = np.zeros_like(q)
    qmax = float(np.max(q, initial=0.0))
    if qmax <= 0.0:
        return out
    kmax = int(math.ceil(0.5 * math.sqrt(42.0 * qmax) / h + 1.0))
    pos = q > 0.0
    for k in range(kmax + 1):
        out[pos] += 2.0 * np.exp(-((2 * k + 1) * h) ** 2 / (4.0 * q[pos]))
    return out


# -- public solvers -----------------------------------------------------------


def flux_left(problem: ProblemData, a: Coefficient, return_terms: bool = False):
    """Boundary flux u_x(0, t_i) for the given diffusivity (t = 0 excluded).

    Four contributions: the initial-slope layer, the two differentiated
    boundary/source single-layers (weakly singular, handled by the
    product-integration rule), and the volume term driven by f_x.  Under the
    sign hypotheses every term is nonnegative and the left single-layer is
    positive, which keeps the flux positive.
    """
    _check_alignment(a, problem)
    theta = accumulate_theta(a)
    t = problem.t_grid
    N = t.size - 1
    h = problem.h
    xg = problem.x_grid

    g2 = (problem.f[0, :] - problem.mu1_prime) / SQRT_PI
    g3 = (problem.mu2_prime - problem.f[-1, :]) / SQRT_PI

    T1 = np.full(N + 1, np.nan)
    T2 = np.full(N + 1, np.nan)
    T2_free = np.full(N + 1, np.nan)
    T3 = np.full(N + 1, np.nan)
    T4 = np.full(N + 1, np.nan)

    T1[1:] = _neumann_layer_at_left(xg, problem.phi_prime, theta.values[1:], h)

    for i in range(1, N + 1):
        rule = singular_rule(theta, i)
        q_row = theta.values[i] - theta.values[: i + 1]
        T2_free[i] = rule.apply(g2[: i + 1])
        T2[i] = rule.apply(g2[: i + 1] * _even_factor(q_row, h))
        T3[i] = rule.apply(g3[: i + 1] * _odd_factor(q_row, h))

    seg_i, lo, hi = _segment_table(theta, np.arange(1, N + 1))
    tau, w = _gl_segments(lo, hi, 4)
    q = _clock_diffs(theta, seg_i, tau, 4)
    i_rep = np.repeat(seg_i, 4)

    inner = np.empty_like(tau)
    small = q <= _Q_SPLIT * h * h
    if small.any():
        cols = _interp_columns(problem.f_x, t, tau[small])
        inner[small] = _neumann_layer_at_left(xg, cols, q[small], h)
    if (~small).any():
        mom = _VolumeMoments(xg, problem.f_x, t, h)
        mass, cos_tau, _ = mom.interp(tau[~small])
        decay = mom.decay(q[~small])
        inner[~small] = mass / h + (2.0 / h) * np.einsum("kn,kn->n", cos_tau, decay)
    vol = np.zeros(N + 1)
    np.add.at(vol, i_rep, w * inner)
    T4[1:] = vol[1:]

    values = T1 + T2 + T3 + T4
    trace = FluxTrace(grid=problem.tgrid, values=values)
    if return_terms:
        return trace, {
            "initial_layer": T1,
            "left_layer": T2,
            "left_layer_free": T2_free,
            "right_layer": T3,
            "volume": T4,
        }
    return trace


def evaluate_u(problem: ProblemData, a: Coefficient, x=None) -> TemperatureField:
    """Temperature field u(x, t_i) for the given diffusivity.

    Interior points come from the kernel representation; the parabolic
    boundary rows are filled from the data themselves (the representation
    attains them only as limits).
    """
    _check_alignment(a, problem)
    theta = accumulate_theta(a)
    t = problem.t_grid
    N = t.size - 1
    h = problem.h
    xg = problem.x_grid
    x_eval = problem.x_grid if x is None else np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((x_eval < 0) | (x_eval > h)):
        raise DirectSolverError("evaluation points must lie in [0, h]")

    out = np.empty((x_eval.size, N + 1))
    out[:, 0] = np.interp(x_eval, xg, problem.phi)
    left = x_eval == 0.0
    right = x_eval == h
    out[left, 1:] = problem.mu1[None, 1:]
    out[right, 1:] = problem.mu2[None, 1:]
    interior = np.nonzero(~(left | right))[0]
    if interior.size == 0:
        return TemperatureField(x=x_eval, grid=problem.tgrid, values=out)

    mu1_0 = float(problem.mu1[0])
    mu2_0 = float(problem.mu2[0])
    theta_nodes = theta.values[1:]

    seg_i, lo, hi = _segment_table(theta, np.arange(1, N + 1))
    tau, w = _gl_segments(lo, hi, 4)
    q = _clock_diffs(theta, seg_i, tau, 4)
    i_rep = np.repeat(seg_i, 4)
    mu1p_tau = np.interp(tau, t, problem.mu1_prime)
    mu2p_tau = np.interp(tau, t, problem.mu2_prime)

    small = q <= _Q_SPLIT * h * h
    big = ~small
    f_cols_small = _interp_columns(problem.f, t, tau[small]) if small.any() else None
    mom = _VolumeMoments(xg, problem.f, t, h)
    if big.any():
        _, _, sin_big = mom.interp(tau[big])
        decay_big = mom.decay(q[big])
        sin_decay = sin_big * decay_big          # (K, nbig)
    kvec = np.arange(1, _K_MODES + 1)

    for row in interior:
        xv = float(x_eval[row])
        A = _dirichlet_layer(xg, problem.phi, xv, theta_nodes, h)
        B = np.zeros(N + 1)
        C = np.zeros(N + 1)
        np.add.at(B, i_rep, w * _wall_primitive_even(xv, q, h) * mu1p_tau)
        np.add.at(C, i_rep, w * _wall_primitive_odd(xv, q, h) * mu2p_tau)
        Bv = B[1:] + mu1_0 * _wall_primitive_even(xv, theta_nodes, h)
        Cv = C[1:] + mu2_0 * _wall_primitive_odd(xv, theta_nodes, h)

        inner = np.empty_like(tau)
        if small.any():
            inner[small] = _dirichlet_layer(xg, f_cols_small, xv, q[small], h)
        if big.any():
            sines = np.sin(kvec * math.pi * xv / h)
            inner[big] = (2.0 / h) * (sines @ sin_decay)
        D = np.zeros(N + 1)
        np.add.at(D, i_rep, w * inner)
        out[row, 1:] = A + Bv - Cv + D[1:]

    if not np.isfinite(out).all():
        raise DirectSolverError("non-finite field value")
    return TemperatureField(x=x_eval, grid=problem.tgrid, values=out)
