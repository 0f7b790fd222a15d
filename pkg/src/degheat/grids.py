"""Time meshes for quantities sampled on [0, T].

The coefficient vanishes like t^beta at t = 0, so meshes are graded toward
the origin: t_i = T * (i/N)**gamma with gamma >= 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing time nodes t_0 = 0 < t_1 < ... < t_N = T."""

    nodes: np.ndarray
    gamma: float = 1.0

    def __post_init__(self):
        nodes = _frozen_array(self.nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise GridError("a time grid needs at least two nodes")
        if not np.isfinite(nodes).all():
            raise GridError("non-finite time node")
        if nodes[0] != 0.0:
            raise GridError("first time node must be t = 0")
        if not np.all(np.diff(nodes) > 0.0):
            raise GridError("non-monotone grid")
        if self.gamma < 1.0:
            raise GridError("grading exponent must be >= 1")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "gamma", float(self.gamma))

    @classmethod
    def graded(cls, horizon: float, panels: int, gamma: float = 2.0) -> "TimeGrid":
        """Grid with nodes T*(i/N)**gamma, clustered at the degenerate origin."""
        if horizon <= 0.0:
            raise GridError("horizon must be positive")
        if panels < 1:
            raise GridError("need at least one panel")
        i = np.arange(panels + 1, dtype=float)
        return cls(horizon * (i / panels) ** gamma, gamma=float(gamma))

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    @property
    def n_panels(self) -> int:
        return self.nodes.size - 1

    def panel_widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    def refined(self, factor: int) -> "TimeGrid":
        """Subdivide every panel into `factor` equal parts (coarse nodes kept exactly)."""
        if factor < 1 or int(factor) != factor:
            raise GridError("refinement factor must be a positive integer")
        factor = int(factor)
        if factor == 1:
            return self
        t = self.nodes
        pieces = [np.array([0.0])]
        frac = np.arange(1, factor + 1, dtype=float) / factor
        for j in range(self.n_panels):
            pieces.append(t[j] + frac * (t[j + 1] - t[j]))
        fine = np.concatenate(pieces)
        fine[::factor] = t  # keep coarse nodes bit-exact
        return TimeGrid(fine, gamma=self.gamma)
