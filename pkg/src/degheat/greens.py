"""Accumulated diffusivity theta(t) and the image-series heat kernels on [0, h].

The kernels for the first (k = 1, fixed-temperature) and second (k = 2,
insulated) boundary value problems are infinite sums of Gaussians reflected
across both walls, evaluated in the rescaled clock q = theta(t) - theta(tau)
with theta(t) the running integral of the diffusivity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coefficient import Coefficient
from .errors import GridError, QuadratureError
from .grids import TimeGrid, _frozen_array

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class GreenParams:
    """Kernel configuration: boundary type k (1 or 2), wall distance h, series cutoff."""

    k: int
    h: float
    truncation_tol: float = 1e-16

    def __post_init__(self):
        if self.k not in (1, 2):
            raise ValueError("boundary type k must be 1 or 2")
        if self.h <= 0.0:
            raise ValueError("domain length must be positive")
        if not 0.0 < self.truncation_tol < 1.0:
            raise ValueError("truncation tolerance must lie in (0, 1)")


def _n_images(h: float, d_max: float, tol: float) -> int:
    """Largest image index whose Gaussian weight can exceed `tol`.

    Keeps n with exp(-(2|n|h - 2h)^2 / (4 d)) >= tol.  For very small d only
    the n in {-1, 0, 1} survive.
    """
    if d_max <= (h / 40.0) ** 2:
        return 1
    reach = math.sqrt(4.0 * d_max * math.log(1.0 / tol))
    return 1 + int(math.ceil(reach / (2.0 * h)))


def _image_sum(params: GreenParams, x, xi, theta_diff, mode: str):
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    d = np.asarray(theta_diff, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("theta difference must be positive; the coincident-time "
                         "limit is handled by the quadrature layer, not the kernel")
    if np.any((x < 0) | (x > params.h)) or np.any((xi < 0) | (xi > params.h)):
        raise ValueError("positions must lie in [0, h]")
    x, xi, d = np.broadcast_arrays(x, xi, d)
    h = params.h
    sign = (-1.0) ** params.k
    nmax = _n_images(h, float(np.max(d)), params.truncation_tol)
    total = np.zeros(d.shape)
    inv4d = 0.25 / d
    for n in range(-nmax, nmax + 1):
        arg_m = x - xi + 2.0 * n * h
        arg_p = x + xi + 2.0 * n * h
        em = np.exp(-arg_m * arg_m * inv4d)
        ep = np.exp(-arg_p * arg_p * inv4d)
        if mode == "value":
            total += em + sign * ep
        elif mode == "dx":
            total += (-arg_m * em - sign * arg_p * ep) * (0.5 / d)
        elif mode == "dxi":
            total += (arg_m * em - sign * arg_p * ep) * (0.5 / d)
    out = total / (2.0 * np.sqrt(np.pi * d))
    return out if out.ndim else float(out)


def green(params: GreenParams, x, xi, theta_diff):
    """Kernel G_k(x, xi) at clock separation theta_diff (units 1/length).

    Symmetric in x and xi; for k = 1 it vanishes at x in {0, h}, for k = 2
    its integral over xi in [0, h] is 1 for every positive theta_diff.
    """
    return _image_sum(params, x, xi, theta_diff, "value")


def green_dx(params: GreenParams, x, xi, theta_diff):
    """Derivative of G_k with respect to the field point x (units 1/length^2)."""
    return _image_sum(params, x, xi, theta_diff, "dx")


def green_dxi(params: GreenParams, x, xi, theta_diff):
    """Derivative of G_k with respect to the source point xi (units 1/length^2).

    For k = 2 this vanishes at xi in {0, h} (insulated walls).
    """
    return _image_sum(params, x, xi, theta_diff, "dxi")


@dataclass(frozen=True)
class Theta:
    """Cumulative diffusivity theta(t_i) on a TimeGrid with monotone C^1 interpolation.

    `rates` are the diffusivity samples a(t_i); the within-panel model is the
    cubic Hermite interpolant of (values, rates).  When the values come from
    the trapezoid rule on the same samples the model collapses to the exact
    piecewise-quadratic antiderivative of the piecewise-linear diffusivity.
    """

    grid: TimeGrid
    values: np.ndarray
    rates: np.ndarray | None = None

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.shape != self.grid.nodes.shape:
            raise GridError("theta samples must match the time grid")
        if values[0] != 0.0:
            raise GridError("theta must vanish at t = 0")
        if np.any(np.diff(values) < 0.0):
            raise GridError("theta must be nondecreasing")
        rates = self.rates
        if rates is None:
            rates = np.gradient(values, self.grid.nodes, edge_order=2)
            np.maximum(rates, 0.0, out=rates)
        rates = _frozen_array(rates)
        if rates.shape != values.shape:
            raise GridError("rate samples must match the time grid")
        if np.any(rates < 0.0):
            raise GridError("negative diffusivity rate")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "rates", rates)
        t = self.grid.nodes
        width = np.diff(t)
        slope = np.diff(values) / width
        c2 = (3.0 * slope - 2.0 * rates[:-1] - rates[1:]) / width
        c3 = (rates[:-1] + rates[1:] - 2.0 * slope) / width**2
        object.__setattr__(self, "_c2", _frozen_array(c2))
        object.__setattr__(self, "_c3", _frozen_array(c3))

    def panel_poly(self, j: int) -> tuple[float, float, float, float]:
        """Local cubic theta(t_j + u) = c0 + c1 u + c2 u^2 + c3 u^3 on panel j."""
        return (
            float(self.values[j]),
            float(self.rates[j]),
            float(self._c2[j]),
            float(self._c3[j]),
        )

    def _panel_index(self, t: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.grid.nodes, t, side="right") - 1
        return np.clip(idx, 0, self.grid.n_panels - 1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        j = self._panel_index(t)
        u = t - self.grid.nodes[j]
        out = self.values[j] + u * (self.rates[j] + u * (self._c2[j] + u * self._c3[j]))
        return out if out.ndim else float(out)

    def diff_from_node(self, i: int, tau):
        """theta(t_i) - theta(tau) for tau <= t_i, computed without cancellation."""
        tau = np.asarray(tau, dtype=float)
        j = self._panel_index(tau)
        u = tau - self.grid.nodes[j]
        poly = u * (self.rates[j] + u * (self._c2[j] + u * self._c3[j]))
        out = (self.values[i] - self.values[j]) - poly
        out = np.maximum(out, 0.0)
        return out if out.ndim else float(out)


def accumulate_theta(a: Coefficient) -> Theta:
    """Trapezoidal running integral of the sampled diffusivity (exact for
    piecewise-linear a)."""
    if np.any(a.values < 0.0):
        raise QuadratureError("negative diffusivity sample")
    t = a.grid.nodes
    increments = 0.5 * (a.values[1:] + a.values[:-1]) * np.diff(t)
    values = np.concatenate([[0.0], np.cumsum(increments)])
    return Theta(a.grid, values, rates=a.values)
