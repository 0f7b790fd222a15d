"""Problem data model, file ingestion, manufactured data, and the
flux-data / temperature-data boundary transform.

All tabulated functions are interpolated piecewise linearly between samples,
which preserves the sign conditions the solvability theory needs; derivatives
of tabulated data use centered second-order differences, one-sided at the
endpoints.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .coefficient import Coefficient
from .errors import OracleError, ProblemFormatError
from .grids import TimeGrid, _frozen_array

log = logging.getLogger(__name__)

_PROBLEM_KEYS = ("h", "T", "beta", "x_grid", "t_grid", "phi", "f", "mu1", "mu2", "mu3")


@dataclass(frozen=True, eq=False)
class ConditionCheck:
    """Outcome of one solvability condition: positive margin means pass distance."""

    name: str
    passed: bool
    margin: float
    location: float | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": bool(self.passed),
            "margin": float(self.margin),
            "location": None if self.location is None else float(self.location),
        }


@dataclass(frozen=True, eq=False)
class HypothesisReport:
    """Per-condition results of the solvability validator."""

    checks: tuple[ConditionCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failpublic(self):  # pragma: no cover - convenience alias
        return [c for c in self.checks if not c.passed]

    def failures(self) -> list[ConditionCheck]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> str:
        return json.dumps([c.to_dict() for c in self.checks], sort_keys=True)

    def to_dict(self) -> dict:
        return {"pass": self.passed, "conditions": [c.to_dict() for c in self.checks]}


@dataclass(frozen=True, eq=False)
class ProblemData:
    """The data quintuple (phi, f, mu1, mu2, mu3) with geometry and exponent.

    f is stored as a 2-D array over x_grid x t_grid.  mu3 is the boundary
    flux datum a(t) * u_x(0, t).
    """

    h: float
    T: float
    beta: float
    x_grid: np.ndarray
    t_grid: np.ndarray
    phi: np.ndarray
    f: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray
    mu3: np.ndarray

    def __post_init__(self):
        if not (self.h > 0.0):
            raise ProblemFormatError("domain length h must be positive")
        if not (self.T > 0.0):
            raise ProblemFormatError("horizon T must be positive")
        if self.beta < 1.0:
            raise ProblemFormatError("strong degeneration requires beta >= 1")
        x = _frozen_array(self.x_grid)
        t = _frozen_array(self.t_grid)
        for name, grid in (("x", x), ("t", t)):
            if grid.ndim != 1 or grid.size < 3:
                raise ProblemFormatError(f"{name}-grid needs at least three nodes")
            if not np.all(np.diff(grid) > 0.0):
                raise ProblemFormatError("non-monotone grid")
        if abs(x[0]) > 1e-12 * self.h or abs(x[-1] - self.h) > 1e-12 * self.h:
            raise ProblemFormatError("x-grid must span [0, h]")
        if abs(t[0]) > 1e-12 * self.T or abs(t[-1] - self.T) > 1e-12 * self.T:
            raise ProblemFormatError("t-grid must span [0, T]")
        phi = _frozen_array(self.phi)
        f = _frozen_array(self.f)
        mu1 = _frozen_array(self.mu1)
        mu2 = _frozen_array(self.mu2)
        mu3 = _frozen_array(self.mu3)
        if phi.shape != x.shape:
            raise ProblemFormatError("phi must be sampled on the x-grid")
        if f.shape != (x.size, t.size):
            raise ProblemFormatError("f must be sampled on x_grid x t_grid")
        for name, arr in (("mu1", mu1), ("mu2", mu2), ("mu3", mu3)):
            if arr.shape != t.shape:
                raise ProblemFormatError(f"{name} must be sampled on the t-grid")
        for name, arr in (("phi", phi), ("f", f), ("mu1", mu1), ("mu2", mu2), ("mu3", mu3)):
            if not np.isfinite(arr).all():
                raise ProblemFormatError(f"non-finite value in {name}")
        object.__setattr__(self, "x_grid", x)
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "mu1", mu1)
        object.__setattr__(self, "mu2", mu2)
        object.__setattr__(self, "mu3", mu3)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "beta", float(self.beta))

    # -- derived samples (centered second-order, one-sided at endpoints) --

    @cached_property
    def tgrid(self) -> TimeGrid:
        return TimeGrid(self.t_grid)

    @cached_property
    def phi_prime(self) -> np.ndarray:
        return np.gradient(self.phi, self.x_grid, edge_order=2)

    @cached_property
    def phi_second(self) -> np.ndarray:
        return np.gradient(self.phi_prime, self.x_grid, edge_order=2)

    @cached_property
    def mu1_prime(self) -> np.ndarray:
        return np.gradient(self.mu1, self.t_grid, edge_order=2)

    @cached_property
    def mu2_prime(self) -> np.ndarray:
        return np.gradient(self.mu2, self.t_grid, edge_order=2)

    @cached_property
    def mu3_prime(self) -> np.ndarray:
        return np.gradient(self.mu3, self.t_grid, edge_order=2)

    @cached_property
    def f_x(self) -> np.ndarray:
        return np.gradient(self.f, self.x_grid, axis=0, edge_order=2)

    @cached_property
    def f_xx(self) -> np.ndarray:
        return np.gradient(self.f_x, self.x_grid, axis=0, edge_order=2)

    def f_at_time(self, t: float, x: np.ndarray | None = None) -> np.ndarray:
        """Source column f(., t) by linear interpolation, optionally re-sampled in x."""
        tg = self.t_grid
        j = int(np.clip(np.searchsorted(tg, t, side="right") - 1, 0, tg.size - 2))
        w = (t - tg[j]) / (tg[j + 1] - tg[j])
        w = min(max(w, 0.0), 1.0)
        col = (1.0 - w) * self.f[:, j] + w * self.f[:, j + 1]
        if x is None:
            return col
        return np.interp(x, self.x_grid, col)

    def save(self, path: str | os.PathLike) -> None:
        save_problem(self, path)


def _as_list(arr: np.ndarray) -> list:
    return [float(v) for v in np.asarray(arr).ravel()]


def save_problem(problem: ProblemData, path: str | os.PathLike) -> None:
    """Write the documented JSON schema (bit-exact round trip of samples)."""
    payload = {
        "h": problem.h,
        "T": problem.T,
        "beta": problem.beta,
        "x_grid": _as_list(problem.x_grid),
        "t_grid": _as_list(problem.t_grid),
        "phi": _as_list(problem.phi),
        "f": _as_list(problem.f),
        "mu1": _as_list(problem.mu1),
        "mu2": _as_list(problem.mu2),
        "mu3": _as_list(problem.mu3),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_problem(path: str | os.PathLike) -> ProblemData:
    """Read and validate a problem file (see save_problem for the schema)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemFormatError(f"cannot read problem file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ProblemFormatError("problem file must hold a JSON object")
    missing = [k for k in _PROBLEM_KEYS if k not in raw]
    if missing:
        raise ProblemFormatError(f"problem file misses keys: {', '.join(missing)}")
    try:
        x = np.asarray(raw["x_grid"], dtype=float)
        t = np.asarray(raw["t_grid"], dtype=float)
        f = np.asarray(raw["f"], dtype=float).reshape(x.size, t.size)
        return ProblemData(
            h=float(raw["h"]),
            T=float(raw["T"]),
            beta=float(raw["beta"]),
            x_grid=x,
            t_grid=t,
            phi=np.asarray(raw["phi"], dtype=float),
            f=f,
            mu1=np.asarray(raw["mu1"], dtype=float),
            mu2=np.asarray(raw["mu2"], dtype=float),
            mu3=np.asarray(raw["mu3"], dtype=float),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ProblemFormatError):
            raise
        raise ProblemFormatError(f"malformed problem file: {exc}") from exc


def save_coefficient(a: Coefficient, path: str | os.PathLike) -> None:
    payload = {
        "beta": a.beta,
        "t_grid": _as_list(a.grid.nodes),
        "values": _as_list(a.values),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_coefficient(path: str | os.PathLike) -> Coefficient:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        grid = TimeGrid(np.asarray(raw["t_grid"], dtype=float))
        return Coefficient(grid, np.asarray(raw["values"], dtype=float), float(raw["beta"]))
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise ProblemFormatError(f"cannot read coefficient file {path}: {exc}") from exc


# -- manufactured data ------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """Smooth data shapes (phi, f, mu1, mu2) for manufacturing a problem."""

    name: str
    phi: Callable
    f: Callable
    mu1: Callable
    mu2: Callable


def _steady_linear(h: float) -> Scenario:
    return Scenario(
        name="steady-linear",
        phi=lambda x: np.asarray(x, dtype=float),
        f=lambda x, t: np.zeros(np.broadcast(x, t).shape),
        mu1=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        mu2=lambda t: np.full_like(np.asarray(t, dtype=float), h),
    )


def _heating(h: float) -> Scenario:
    # phi'(0) = 0 keeps the flux datum scaling like t**((beta+1)/2); the
    # boundary slopes keep every sign condition strictly satisfied.
    return Scenario(
        name="heating",
        phi=lambda x: np.asarray(x, dtype=float) ** 2,
        f=lambda x, t: 1.0 + np.asarray(x, dtype=float) + 0.0 * np.asarray(t, dtype=float),
        mu1=lambda t: 0.5 * np.asarray(t, dtype=float),
        mu2=lambda t: h**2 + 1.25 * (1.0 + h) * np.asarray(t, dtype=float),
    )


SCENARIOS: dict[str, Callable[[float], Scenario]] = {
    "steady-linear": _steady_linear,
    "heating": _heating,
}


def _coefficient_samples(a_true, nodes: np.ndarray, beta: float | None):
    if isinstance(a_true, Coefficient):
        return np.asarray(a_true(nodes), dtype=float), a_true.beta
    if callable(a_true):
        if beta is None:
            raise ValueError("a beta exponent is required with a callable coefficient")
        return np.asarray(a_true(nodes), dtype=float), float(beta)
    raise TypeError("a_true must be a Coefficient or a callable of t")


def manufacture(
    a_true,
    scenario: Scenario | str,
    mesh: TimeGrid,
    *,
    h: float = 1.0,
    nx: int = 32,
    refine: int = 4,
    oracle_nx: int | None = None,
    implicitness: float = 0.5,
    beta: float | None = None,
    layer_margin: float = 6.0,
    resolve_margin: float = 10.0,
) -> tuple[ProblemData, Coefficient]:
    """Generate boundary data consistent with a known coefficient.

    Solves the forward problem with the independent finite-difference oracle
    on a time grid refined `refine`-fold, records the boundary temperatures,
    and sets the flux datum mu3 = a_true * u_x(0, .) from the oracle flux.
    The space resolution of the oracle is chosen so the boundary layer of
    width sqrt(2 theta(t)) is well resolved for t >= T/20.  Below the
    resolvable scale (and only when the raw flux actually shows an
    unresolved layer there) mu3 is continued from the first resolved sample
    with exponent beta times the kernel-solver flux shape, which keeps the
    early decades consistent with the stated degeneration rate; the oracle
    remains the sole calibration of the level.

    Returns the problem together with the coefficient sampled on `mesh`.
    """
    from .fdoracle import FdMesh, fd_solve

    if isinstance(scenario, str):
        try:
            scenario = SCENARIOS[scenario](h)
        except KeyError:
            raise ValueError(f"unknown scenario {scenario!r}; "
                             f"available: {sorted(SCENARIOS)}") from None

    fine_t = mesh.refined(refine)
    a_fine, beta = _coefficient_samples(a_true, fine_t.nodes, beta)
    if np.any(a_fine < 0.0) or a_fine[0] != 0.0:
        raise ValueError("true coefficient must be nonnegative and vanish at t = 0")

    theta_fine = np.concatenate(
        [[0.0], np.cumsum(0.5 * (a_fine[1:] + a_fine[:-1]) * np.diff(fine_t.nodes))]
    )
    T = mesh.horizon
    theta_t20 = float(np.interp(T / 20.0, fine_t.nodes, theta_fine))
    if oracle_nx is None:
        width = math.sqrt(2.0 * max(theta_t20, 1e-300))
        needed = int(math.ceil(resolve_margin * h / width / nx)) * nx
        oracle_nx = int(min(2048, max(4 * nx, needed)))
    if oracle_nx % nx:
        oracle_nx = (oracle_nx // nx + 1) * nx
    log.debug("manufacture: oracle grid %d x %d", oracle_nx, fine_t.n_panels)

    x_fine = np.linspace(0.0, h, oracle_nx + 1)
    fine_problem = ProblemData(
        h=h,
        T=T,
        beta=beta,
        x_grid=x_fine,
        t_grid=fine_t.nodes,
        phi=scenario.phi(x_fine),
        f=np.asarray(scenario.f(x_fine[:, None], fine_t.nodes[None, :]), dtype=float),
        mu1=scenario.mu1(fine_t.nodes),
        mu2=scenario.mu2(fine_t.nodes),
        mu3=np.zeros_like(fine_t.nodes),
    )
    a_fine_coef = Coefficient(fine_t, a_fine, beta)
    _, flux = fd_solve(fine_problem, a_fine_coef, FdMesh(oracle_nx, fine_t, implicitness))

    tstride = fine_t.n_panels // mesh.n_panels
    xstride = oracle_nx // nx
    t = mesh.nodes
    flux_c = flux.values[::tstride]
    a_coarse = a_fine[::tstride]
    if np.any(flux_c[1:] <= 0.0):
        bad = 1 + int(np.argmax(flux_c[1:] <= 0.0))
        raise OracleError(
            f"oracle flux is nonpositive at t = {t[bad]:.6g} where the flux datum "
            "must be positive"
        )
    mu3 = a_coarse * flux_c
    mu3[0] = 0.0

    truth = Coefficient(mesh, a_coarse.copy(), beta)

    def build(mu3_arr):
        return ProblemData(
            h=h,
            T=T,
            beta=beta,
            x_grid=x_fine[::xstride],
            t_grid=t,
            phi=scenario.phi(x_fine[::xstride]),
            f=np.asarray(scenario.f(x_fine[::xstride, None], t[None, :]), dtype=float),
            mu1=scenario.mu1(t),
            mu2=scenario.mu2(t),
            mu3=mu3_arr,
        )

    problem = build(mu3)

    # continuation below the resolvable boundary-layer scale
    width_c = np.sqrt(2.0 * np.maximum(theta_fine[::tstride], 0.0))
    dx_fine = h / oracle_nx
    resolved = width_c >= layer_margin * dx_fine
    if not resolved[1:].all() and resolved[1:].any():
        cut = 1 + int(np.argmax(resolved[1:]))
        if cut > 1:
            spread = float(np.ptp(flux_c[1:cut])) / max(abs(flux_c[cut]), 1e-300)
            if spread > 0.02:
                from .direct import flux_left

                shape = flux_left(problem, truth).values
                mu3 = mu3.copy()
                mu3[1:cut] = (mu3[cut] * (t[1:cut] / t[cut]) ** beta
                              * shape[1:cut] / shape[cut])
                problem = build(mu3)
                log.debug("manufacture: continued %d early flux samples below t=%g",
                          cut - 1, t[cut])
    scale = max(np.max(np.abs(problem.phi)), 1.0)
    if abs(problem.phi[0] - problem.mu1[0]) > 1e-10 * scale or \
       abs(problem.phi[-1] - problem.mu2[0]) > 1e-10 * scale:
        raise ValueError("scenario data are incompatible at the corners")
    return problem, truth


# -- flux-data boundary form -------------------------------------------------


def _cumtrapz(y: np.ndarray, x: np.ndarray, axis: int = -1) -> np.ndarray:
    dx = np.diff(x)
    if axis == 0:
        inc = 0.5 * (y[1:, ...] + y[:-1, ...]) * dx[:, None]
        out = np.concatenate([np.zeros((1,) + y.shape[1:]), np.cumsum(inc, axis=0)], axis=0)
    else:
        inc = 0.5 * (y[..., 1:] + y[..., :-1]) * dx
        out = np.concatenate([np.zeros(y.shape[:-1] + (1,)), np.cumsum(inc, axis=-1)], axis=-1)
    return out


def neumann_transform(problem_n: ProblemData) -> ProblemData:
    """Turn flux-boundary data into the temperature-boundary form.

    Input roles: mu1 = u_x(0,.), mu2 = u_x(h,.), mu3 = u(0,.).  Differentiate
    the unknown once in x; the new problem for v = u_x has initial data phi',
    source f_x, the same boundary arrays (now temperatures of v), and flux
    datum mu3'(t) - f(0, t).
    """
    if problem_n.t_grid.size < 3:
        raise ProblemFormatError("mu3 samples too sparse to difference (fewer than 3 nodes)")
    phi_v = np.gradient(problem_n.phi, problem_n.x_grid, edge_order=2)
    # the corners of the differentiated initial data are boundary data of the
    # new problem and are already sampled exactly: u_x(0,0) = mu1(0) etc.
    phi_v[0] = problem_n.mu1[0]
    phi_v[-1] = problem_n.mu2[0]
    f_v = np.gradient(problem_n.f, problem_n.x_grid, axis=0, edge_order=2)
    mu3_v = np.gradient(problem_n.mu3, problem_n.t_grid, edge_order=2) - problem_n.f[0, :]
    return ProblemData(
        h=problem_n.h,
        T=problem_n.T,
        beta=problem_n.beta,
        x_grid=problem_n.x_grid,
        t_grid=problem_n.t_grid,
        phi=phi_v,
        f=f_v,
        mu1=problem_n.mu1,
        mu2=problem_n.mu2,
        mu3=mu3_v,
    )


def neumann_equivalent(problem: ProblemData, f_baseline: np.ndarray | None = None) -> ProblemData:
    """Build the flux-boundary problem whose transform reproduces `problem`.

    Integrates the data once in x (and the flux datum once in t), so that
    neumann_transform of the result recovers `problem` to second order in the
    sample spacing.  Useful for exercising the transform end to end.
    """
    x = problem.x_grid
    t = problem.t_grid
    if f_baseline is None:
        f_baseline = np.zeros_like(t)
    phi_n = _cumtrapz(problem.phi, x)
    f_n = _cumtrapz(problem.f, x, axis=0) + f_baseline[None, :]
    mu3_n = _cumtrapz(problem.mu3 + f_baseline, t)
    return ProblemData(
        h=problem.h,
        T=problem.T,
        beta=problem.beta,
        x_grid=x,
        t_grid=t,
        phi=phi_n,
        f=f_n,
        mu1=problem.mu1,
        mu2=problem.mu2,
        mu3=mu3_n,
    )
