"""Sampled diffusivity a(t) vanishing like t^beta at the initial moment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GridError
from .grids import TimeGrid, _frozen_array


@dataclass(frozen=True)
class Coefficient:
    """Diffusivity samples a(t_i) on a TimeGrid, with a(0) = 0.

    Between nodes the coefficient is piecewise linear; below the first
    positive node it follows the power anchor a(t_1) * (t/t_1)**beta, which
    matches the prescribed vanishing rate at the origin.
    """

    grid: TimeGrid
    values: np.ndarray
    beta: float

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.shape != self.grid.nodes.shape:
            raise GridError("coefficient samples must match the time grid")
        if not np.isfinite(values).all():
            raise GridError("non-finite coefficient sample")
        if values[0] != 0.0:
            raise GridError("coefficient must vanish at t = 0")
        if np.any(values < 0.0):
            raise GridError("negative coefficient sample")
        if self.beta <= 0.0:
            raise GridError("degeneration exponent must be positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "beta", float(self.beta))

    @classmethod
    def from_callable(cls, fn: Callable, grid: TimeGrid, beta: float) -> "Coefficient":
        vals = np.asarray(fn(grid.nodes), dtype=float).copy()
        vals[0] = 0.0
        return cls(grid, vals, beta)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        nodes = self.grid.nodes
        out = np.interp(t, nodes, self.values)
        t1 = nodes[1]
        small = (t > 0.0) & (t < t1)
        if np.any(small):
            out = np.where(small, self.values[1] * (t / t1) ** self.beta, out)
        return out if out.ndim else float(out)

    def weighted_values(self) -> np.ndarray:
        """Samples of a(t)/t^beta at the positive nodes (index 1 onward)."""
        t = self.grid.nodes[1:]
        return self.values[1:] / t**self.beta

    def weighted_sup_distance(self, other: "Coefficient") -> float:
        """sup over positive nodes of |a - other|(t_i) / t_i^beta."""
        if not np.array_equal(self.grid.nodes, other.grid.nodes):
            raise GridError("coefficients live on different grids")
        t = self.grid.nodes[1:]
        return float(np.max(np.abs(self.values[1:] - other.values[1:]) / t**self.beta))

    def with_values(self, values) -> "Coefficient":
        return Coefficient(self.grid, values, self.beta)
