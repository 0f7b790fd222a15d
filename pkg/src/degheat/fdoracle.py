"""Independent finite-difference forward solver for the degenerate heat equation.

Theta-scheme (Crank-Nicolson to backward Euler) with the diffusivity sampled
at panel midpoints, so the first step is not killed by a(0) = 0.  Used as
ground truth for manufactured data and to cross-validate the kernel solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.linalg import solve_banded

from .coefficient import Coefficient
from .errors import GridError, OracleError
from .grids import TimeGrid

if TYPE_CHECKING:  # pragma: no cover
    from .problem import ProblemData


@dataclass(frozen=True)
class FdMesh:
    """Uniform space step, graded time grid, implicitness in [1/2, 1]."""

    nx: int
    time: TimeGrid
    implicitness: float = 0.5

    def __post_init__(self):
        if self.nx < 3:
            raise GridError("need at least three space intervals")
        if not 0.5 <= self.implicitness <= 1.0:
            raise GridError("implicitness must lie in [1/2, 1]")


def _one_sided_flux(u0: float, u1: float, u2: float, dx: float) -> float:
    return (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * dx)


def fd_solve(problem: "ProblemData", a: Coefficient, mesh: FdMesh, bc: str = "dirichlet"):
    """March the theta-scheme and return (TemperatureField, FluxTrace).

    With bc="dirichlet" the problem's mu1, mu2 are boundary temperatures;
    with bc="neumann" they are boundary derivatives (second-order ghost
    treatment, used for the insulated conservation check).
    """
    from .direct import FluxTrace, TemperatureField  # local to avoid a cycle

    if bc not in ("dirichlet", "neumann"):
        raise ValueError("bc must be 'dirichlet' or 'neumann'")
    tg = mesh.time
    t = tg.nodes
    nx = mesh.nx
    x = np.linspace(0.0, problem.h, nx + 1)
    dx = problem.h / nx
    sigma = mesh.implicitness

    mu1 = np.interp(t, problem.t_grid, problem.mu1)
    mu2 = np.interp(t, problem.t_grid, problem.mu2)

    field = np.empty((nx + 1, t.size))
    u = np.interp(x, problem.x_grid, problem.phi)
    if bc == "dirichlet":
        u[0], u[-1] = mu1[0], mu2[0]
    field[:, 0] = u

    for m in range(t.size - 1):
        dt = t[m + 1] - t[m]
        a_mid = float(a(0.5 * (t[m] + t[m + 1])))
        if not np.isfinite(a_mid) or a_mid < 0.0:
            raise OracleError(f"invalid diffusivity sample at step {m}")
        r = a_mid * dt / dx**2
        t_eval = sigma * t[m + 1] + (1.0 - sigma) * t[m]
        f_col = problem.f_at_time(t_eval, x)

        if bc == "dirichlet":
            n = nx - 1
            lap = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / dx**2
            rhs = u[1:-1] + (1.0 - sigma) * dt * a_mid * lap + dt * f_col[1:-1]
            rhs[0] += sigma * r * mu1[m + 1]
            rhs[-1] += sigma * r * mu2[m + 1]
            ab = np.zeros((3, n))
            ab[0, 1:] = -sigma * r
            ab[1, :] = 1.0 + 2.0 * sigma * r
            ab[2, :-1] = -sigma * r
            try:
                u[1:-1] = solve_banded((1, 1), ab, rhs)
            except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
                raise OracleError("singular tridiagonal system") from exc
            u[0], u[-1] = mu1[m + 1], mu2[m + 1]
        else:
            n = nx + 1
            lap = np.empty(n)
            lap[1:-1] = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / dx**2
            lap[0] = 2.0 * (u[1] - u[0] - dx * mu1[m]) / dx**2
            lap[-1] = 2.0 * (u[-2] - u[-1] + dx * mu2[m]) / dx**2
            rhs = u + (1.0 - sigma) * dt * a_mid * lap + dt * f_col
            rhs[0] += -sigma * r * 2.0 * dx * mu1[m + 1]
            rhs[-1] += sigma * r * 2.0 * dx * mu2[m + 1]
            ab = np.zeros((3, n))
            ab[0, 1:] = -sigma * r
            ab[0, 1] = -2.0 * sigma * r
            ab[1, :] = 1.0 + 2.0 * sigma * r
            ab[2, :-1] = -sigma * r
            ab[2, -2] = -2.0 * sigma * r
            try:
                u = solve_banded((1, 1), ab, rhs)
            except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
                raise OracleError("singular tridiagonal system") from exc

        if not np.isfinite(u).all():
            raise OracleError(f"forward march diverged at step {m} (t = {t[m + 1]:.3g})")
        field[:, m + 1] = u

    flux = np.empty(t.size)
    flux[0] = np.nan
    for m in range(1, t.size):
        flux[m] = _one_sided_flux(field[0, m], field[1, m], field[2, m], dx)

    return (
        TemperatureField(x=x, grid=tg, values=field),
        FluxTrace(grid=tg, values=flux),
    )
