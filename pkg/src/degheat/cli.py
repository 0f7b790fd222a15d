"""Command-line front end: direct solves, coefficient recovery, data
manufacturing, and validation.

Outputs are plot-ready CSV plus machine-readable JSON; floats are printed
with 17 significant digits so reruns are byte-identical.  Exit codes:
0 success, 2 validation failure, 3 solver error, 4 non-convergence.
Diagnostics go to standard error as single-line JSON events.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .coefficient import Coefficient
from .errors import (DegheatError, DirectSolverError, FluxSignError, GridError,
                     HypothesisError, OracleError, ProblemFormatError,
                     QuadratureError)
from .direct import evaluate_u, flux_left
from .grids import TimeGrid
from .inverse import apriori_band, h_limit, picard_solve
from .problem import (SCENARIOS, load_coefficient, load_problem, manufacture,
                      save_problem)
from .validate import check_hypotheses, estimate_beta

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_NO_CONVERGENCE = 4


def _emit(event: str, **fields) -> None:
    print(json.dumps({"event": event, **fields}, sort_keys=True), file=sys.stderr)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _csv(rows, header) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


class _Stage:
    """Collects outputs in temporary files; nothing lands until commit()."""

    def __init__(self, outdir: str):
        self.outdir = Path(outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.pending: list[tuple[Path, Path]] = []

    def add(self, name: str, text: str) -> None:
        tmp = self.outdir / f".tmp-{name}"
        tmp.write_text(text, encoding="utf-8")
        self.pending.append((tmp, self.outdir / name))

    def commit(self) -> None:
        for tmp, final in self.pending:
            os.replace(tmp, final)
        self.pending.clear()

    def abort(self) -> None:
        for tmp, _ in self.pending:
            tmp.unlink(missing_ok=True)
        self.pending.clear()


def run_direct(args) -> int:
    problem = load_problem(args.input)
    a = load_coefficient(args.coef)
    stage = _Stage(args.out)
    try:
        field = evaluate_u(problem, a)
        flux = flux_left(problem, a)
        rows = [
            (float(x), float(t), float(field.values[j, i]))
            for j, x in enumerate(field.x)
            for i, t in enumerate(problem.t_grid)
        ]
        stage.add("u.csv", _csv(rows, ("x", "t", "u")))
        frows = [(float(t), float(v))
                 for t, v in zip(problem.t_grid[1:], flux.values[1:])]
        stage.add("flux.csv", _csv(frows, ("t", "ux0")))
        stage.commit()
    except BaseException:
        stage.abort()
        raise
    _emit("direct.done", out=str(stage.outdir))
    return EXIT_OK


def run_inverse(args) -> int:
    problem = load_problem(args.input)
    stage = _Stage(args.out)
    report = check_hypotheses(problem)
    report_body: dict = {"hypotheses": report.to_dict()}
    if not report.passed and not args.force:
        report_body["converged"] = False
        report_body["error"] = "hypothesis check failed"
        stage.add("report.json", json.dumps(report_body, sort_keys=True, indent=1))
        stage.commit()
        _emit("inverse.rejected",
              failed=[c.name for c in report.checks if not c.passed])
        return EXIT_VALIDATION

    try:
        coef, log = picard_solve(
            problem,
            relaxation=args.relax,
            tolerance=args.tol,
            max_iterations=args.max_iter,
            force=args.force,
        )
        band = None
        try:
            band = apriori_band(problem)
        except DegheatError:
            pass
        try:
            fitted = estimate_beta(coef)
        except DegheatError:
            fitted = None
        try:
            hl = h_limit(problem)
        except DegheatError:
            hl = None

        t = problem.t_grid
        with np.errstate(divide="ignore", invalid="ignore"):
            weighted = np.where(t > 0, coef.values / np.where(t > 0, t, 1.0) ** coef.beta,
                                np.nan)
        upper = band.upper if band is not None else np.full_like(t, np.nan)
        lower = band.lower if band is not None else np.full_like(t, np.nan)
        rows = [
            (float(t[i]), float(coef.values[i]), float(weighted[i]),
             float(upper[i]), float(lower[i]))
            for i in range(t.size)
        ]
        stage.add("a.csv", _csv(rows, ("t", "a", "a_weighted", "band_upper", "band_lower")))
        crows = [
            (k + 1, float(log.weighted_changes[k]), float(log.relaxations[k]))
            for k in range(log.iterations)
        ]
        stage.add("convergence.csv", _csv(crows, ("iter", "weighted_change", "relaxation")))
        report_body.update({
            "converged": log.converged,
            "iterations": log.iterations,
            "residual": log.residual,
            "fitted_beta": fitted,
            "h_limit": hl,
            "band": None if band is None else {
                "H1": band.H1, "M1": band.M1, "c6_surrogate": band.c6_surrogate,
            },
            "max_band_excess": log.max_band_excess(),
            "tolerance": args.tol,
            "relaxation": args.relax,
        })
        stage.add("report.json", json.dumps(report_body, sort_keys=True, indent=1))
        stage.commit()
    except BaseException:
        stage.abort()
        raise
    if not log.converged:
        _emit("inverse.no_convergence", iterations=log.iterations,
              last_change=log.weighted_changes[-1])
        return EXIT_NO_CONVERGENCE
    _emit("inverse.converged", iterations=log.iterations, residual=log.residual)
    return EXIT_OK


def run_manufacture(args) -> int:
    mesh = TimeGrid.graded(args.horizon, args.nt, args.gamma)
    stage = _Stage(args.out)
    try:
        problem, truth = manufacture(
            lambda t: args.prefactor * t**args.beta,
            args.scenario,
            mesh,
            h=args.h,
            nx=args.nx,
            refine=args.refine,
            beta=args.beta,
        )
        tmp = stage.outdir / ".tmp-problem.json"
        save_problem(problem, tmp)
        stage.pending.append((tmp, stage.outdir / "problem.json"))
        rows = [(float(t), float(v)) for t, v in zip(truth.grid.nodes, truth.values)]
        stage.add("a_true.csv", _csv(rows, ("t", "a")))
        stage.commit()
    except BaseException:
        stage.abort()
        raise
    _emit("manufacture.done", scenario=args.scenario, beta=args.beta,
          out=str(stage.outdir))
    return EXIT_OK


def run_validate(args) -> int:
    problem = load_problem(args.input)
    report = check_hypotheses(problem)
    body = json.dumps(report.to_dict(), sort_keys=True, indent=1)
    if args.out:
        stage = _Stage(args.out)
        stage.add("report.json", body)
        stage.commit()
    else:
        print(body)
    _emit("validate.done", passed=report.passed)
    return EXIT_OK if report.passed else EXIT_VALIDATION


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="degheat",
        description="Recover a time-degenerate heat conduction coefficient "
                    "from boundary flux data.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("direct", help="solve the forward problem for a given coefficient")
    d.add_argument("--input", required=True, help="problem JSON file")
    d.add_argument("--coef", required=True, help="coefficient JSON file")
    d.add_argument("--out", required=True, help="output directory")
    d.set_defaults(func=run_direct)

    i = sub.add_parser("inverse", help="recover the coefficient from the flux datum")
    i.add_argument("--input", required=True)
    i.add_argument("--out", required=True)
    i.add_argument("--tol", type=float, default=1e-8)
    i.add_argument("--relax", type=float, default=0.5)
    i.add_argument("--max-iter", type=int, default=200)
    i.add_argument("--force", action="store_true",
                   help="run even if the hypothesis check fails")
    i.add_argument("--seed", type=int, default=0,
                   help="reserved for randomized sweep ordering (runs are deterministic)")
    i.set_defaults(func=run_inverse)

    m = sub.add_parser("manufacture", help="generate data from a known coefficient")
    m.add_argument("--scenario", choices=sorted(SCENARIOS), default="heating")
    m.add_argument("--beta", type=float, default=1.0)
    m.add_argument("--prefactor", type=float, default=1.0,
                   help="c in the true coefficient c * t**beta")
    m.add_argument("--h", type=float, default=1.0)
    m.add_argument("--horizon", type=float, default=1.0)
    m.add_argument("--nt", type=int, default=192)
    m.add_argument("--nx", type=int, default=32)
    m.add_argument("--gamma", type=float, default=2.0)
    m.add_argument("--refine", type=int, default=4)
    m.add_argument("--out", required=True)
    m.add_argument("--seed", type=int, default=0,
                   help="reserved for randomized sweep ordering (runs are deterministic)")
    m.set_defaults(func=run_manufacture)

    v = sub.add_parser("validate", help="check the solvability hypotheses")
    v.add_argument("--input", required=True)
    v.add_argument("--out", default=None)
    v.set_defaults(func=run_validate)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if getattr(args, "tol", 1.0) <= 0.0:
        _emit("error", kind="config", message="tolerance must be positive")
        return EXIT_VALIDATION
    relax = getattr(args, "relax", 0.5)
    if not 0.0 < relax <= 1.0:
        _emit("error", kind="config", message="relaxation must lie in (0, 1]")
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except (ProblemFormatError, GridError, HypothesisError, ValueError) as exc:
        _emit("error", kind="validation", message=str(exc))
        return EXIT_VALIDATION
    except (OracleError, DirectSolverError, QuadratureError, FluxSignError) as exc:
        _emit("error", kind="solver", message=str(exc))
        return EXIT_SOLVER
    except DegheatError as exc:
        _emit("error", kind="solver", message=str(exc))
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
