"""Recovery of a time-degenerate heat conduction coefficient from boundary flux data.

The forward problem u_t = a(t) u_xx + f on a strip is represented through
image-series heat kernels in the rescaled clock theta(t) = int a; the unknown
coefficient, vanishing like t**beta at the initial moment, solves the
fixed-point equation a = mu3 / u_x(0, .; a) driven by the measured boundary
flux mu3.  The package provides the kernel solver, an independent
finite-difference oracle, the a-priori band machinery, validators for the
solvability hypotheses, and a small CLI.
"""

from .coefficient import Coefficient
from .direct import FluxTrace, TemperatureField, evaluate_u, flux_left
from .errors import (DegheatError, DirectSolverError, FluxSignError, GridError,
                     HypothesisError, OracleError, ProblemFormatError,
                     QuadratureError)
from .fdoracle import FdMesh, fd_solve
from .greens import GreenParams, Theta, accumulate_theta, green, green_dx, green_dxi
from .grids import TimeGrid
from .inverse import (BandProfile, ConvergenceLog, apriori_band, compute_H,
                      h_limit, picard_solve, picard_step, uniqueness_probe)
from .problem import (HypothesisReport, ProblemData, Scenario, SCENARIOS,
                      load_coefficient, load_problem, manufacture,
                      neumann_equivalent, neumann_transform, save_coefficient,
                      save_problem)
from .quad import I1, SingularRule, singular_integral, singular_rule
from .validate import check_hypotheses, estimate_beta

__version__ = "0.1.0"

__all__ = [
    "BandProfile", "Coefficient", "ConvergenceLog", "DegheatError",
    "DirectSolverError", "FdMesh", "FluxSignError", "FluxTrace", "GreenParams",
    "GridError", "HypothesisError", "HypothesisReport", "I1", "OracleError",
    "ProblemData", "ProblemFormatError", "QuadratureError", "SCENARIOS",
    "Scenario", "SingularRule", "TemperatureField", "Theta", "TimeGrid",
    "accumulate_theta", "apriori_band", "check_hypotheses", "compute_H",
    "estimate_beta", "evaluate_u", "fd_solve", "flux_left", "green",
    "green_dx", "green_dxi", "h_limit", "load_coefficient", "load_problem",
    "manufacture", "neumann_equivalent", "neumann_transform", "picard_solve",
    "picard_step", "save_coefficient", "save_problem", "singular_integral",
    "singular_rule", "uniqueness_probe",
]
