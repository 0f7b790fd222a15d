"""Product integration for integrals with the weakly singular kernel
1/sqrt(theta(t) - theta(tau)), plus the endpoint-singular profile integral I1.

The rule integrates the kernel against the hat-function basis of the time
grid, so applying it to nodal samples of g realizes the integral of the
piecewise-linear interpolant of g exactly (up to the within-panel clock
model, the cubic Hermite interpolant carried by Theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureError
from .greens import Theta
from .grids import _frozen_array

_STEEP_RATIO = 4.0
_MAX_TAIL = 16


@lru_cache(maxsize=8)
def _gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to (0, 1)."""
    z, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (z + 1.0), 0.5 * w


@dataclass(frozen=True)
class SingularRule:
    """Node weights for integrating g(tau)/sqrt(theta(t_i) - theta(tau)) over [0, t_i].

    `weights[j]` multiplies the sample g(t_j), j = 0..t_index; the sample at
    the target node carries the limit value of the smooth factor.
    """

    t_index: int
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen_array(self.weights))

    def apply(self, g) -> float:
        g = np.asarray(g, dtype=float)
        if g.size < self.t_index + 1:
            raise QuadratureError("integrand not sampled on the full grid range")
        return float(self.weights @ g[: self.t_index + 1])


def _panel_q(theta: Theta, i: int, j: int, u: np.ndarray) -> np.ndarray:
    """theta(t_i) - theta(t_j + u) via the local cubic, cancellation-free."""
    _, c1, c2, c3 = theta.panel_poly(j)
    head = theta.values[i] - theta.values[j]
    return head - u * (c1 + u * (c2 + u * c3))


def _tail_breaks(width: float, ratio: float) -> np.ndarray:
    """Segment boundaries in [0, width], geometrically refined toward `width`."""
    k = min(_MAX_TAIL, max(1, int(math.ceil(math.log(ratio) / math.log(4.0)))))
    rem = width * 0.25 ** np.arange(k + 1)
    return np.concatenate([[0.0], width - rem[1:], [width]])


def singular_rule(theta: Theta, t_index: int, n_gauss: int = 12) -> SingularRule:
    """Build the product-integration rule targeting node `t_index`."""
    i = int(t_index)
    if i < 1 or i > theta.grid.n_panels:
        raise QuadratureError("target index must name a positive grid node")
    nodes = theta.grid.nodes
    v = theta.values
    weights = np.zeros(i + 1)
    xg, wg = _gauss01(n_gauss)

    q_left = v[i] - v[:i]
    q_right = v[i] - v[1 : i + 1]
    if np.any(q_right[:-1] <= 0.0):
        j = int(np.argmax(q_right[:-1] <= 0.0))
        raise QuadratureError(
            f"accumulated diffusivity is flat between nodes {j + 1} and {i}; "
            "the kernel is not integrable"
        )

    # regular panels, vectorized
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q_right > 0.0, q_left / np.maximum(q_right, 1e-300), np.inf)
    regular = np.nonzero(ratio[:-1] <= _STEEP_RATIO)[0] if i > 1 else np.array([], int)
    if regular.size:
        width = (nodes[regular + 1] - nodes[regular])[:, None]
        u = width * xg[None, :]
        q = _panel_q_many(theta, i, regular, u)
        if np.any(q <= 0.0):
            raise QuadratureError("clock model not strictly increasing inside a panel")
        base = width * wg[None, :] / np.sqrt(q)
        lam = xg[None, :]
        np.add.at(weights, regular, (base * (1.0 - lam)).sum(axis=1))
        np.add.at(weights, regular + 1, (base * lam).sum(axis=1))

    # steep panels (clock shrinking fast toward the target): geometric tail
    steep = np.nonzero(ratio[:-1] > _STEEP_RATIO)[0] if i > 1 else np.array([], int)
    for j in steep:
        width = nodes[j + 1] - nodes[j]
        breaks = _tail_breaks(width, ratio[j])
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            u = lo + (hi - lo) * xg
            q = _panel_q(theta, i, int(j), u)
            if np.any(q <= 0.0):
                raise QuadratureError("clock model not strictly increasing inside a panel")
            base = (hi - lo) * wg / np.sqrt(q)
            lam = u / width
            weights[j] += float(base @ (1.0 - lam))
            weights[j + 1] += float(base @ lam)

    # final panel: factor out the simple zero of the clock difference
    j = i - 1
    width = nodes[i] - nodes[j]
    _, c1, c2, c3 = theta.panel_poly(j)
    a0 = v[i] - v[j]
    r0 = a0 / width
    r1 = (-c1 + r0) / width
    r2 = (-c2 + r1) / width
    zg = math.sqrt(width) * xg
    u = width - zg**2
    r = r0 + u * (r1 + u * r2)
    if a0 <= 0.0 or np.any(r <= 0.0):
        raise QuadratureError(
            f"accumulated diffusivity is flat approaching node {i}; "
            "the kernel is not integrable"
        )
    base = 2.0 * math.sqrt(width) * wg / np.sqrt(r)
    lam = u / width
    weights[j] += float(base @ (1.0 - lam))
    weights[i] += float(base @ lam)

    return SingularRule(i, weights)


def _panel_q_many(theta: Theta, i: int, js: np.ndarray, u: np.ndarray) -> np.ndarray:
    head = (theta.values[i] - theta.values[js])[:, None]
    c1 = theta.rates[js][:, None]
    c2 = theta._c2[js][:, None]
    c3 = theta._c3[js][:, None]
    return head - u * (c1 + u * (c2 + u * c3))


def singular_integral(g, theta: Theta, t_index: int, rule: SingularRule | None = None) -> float:
    """Integral of g(tau)/sqrt(theta(t) - theta(tau)) over [0, t_index node].

    g must be sampled on the grid nodes; its value at the target node is the
    limit of the smooth factor there.
    """
    if rule is None:
        rule = singular_rule(theta, t_index)
    return rule.apply(g)


def I1(beta: float) -> float:
    """The profile integral of 1/sqrt(1 - z**(beta+1)) over the unit interval.

    Split at the point where the radicand reaches 1/2; the outer part is
    mapped by u = sqrt(1 - z**(beta+1)) onto a smooth integrand, so a fixed
    Gauss rule resolves both pieces to near machine precision.
    """
    if beta < 0.0:
        raise ValueError("profile exponent must be nonnegative")
    bp1 = beta + 1.0
    xg, wg = _gauss01(64)
    z0 = 0.5 ** (1.0 / bp1)
    z = z0 * xg
    inner = z0 * float(wg @ (1.0 - z**bp1) ** -0.5)
    u0 = math.sqrt(0.5)
    u = u0 * xg
    outer = (2.0 / bp1) * u0 * float(wg @ (1.0 - u**2) ** (-beta / bp1))
    return inner + outer
