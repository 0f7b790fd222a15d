"""Exception types shared across the package."""


class DegheatError(Exception):
    """Base class for all errors raised by this package."""


class GridError(DegheatError, ValueError):
    """Invalid time or space grid."""


class ProblemFormatError(DegheatError, ValueError):
    """Problem or coefficient file violates the documented schema."""


class QuadratureError(DegheatError, ValueError):
    """Singular quadrature cannot be built (flat clock, bad samples)."""


class DirectSolverError(DegheatError, RuntimeError):
    """Green-function evaluation of the direct problem failed."""


class OracleError(DegheatError, RuntimeError):
    """Finite-difference oracle produced unusable output."""


class FluxSignError(DegheatError, RuntimeError):
    """Boundary flux is nonpositive at a node where the data demand it positive."""

    def __init__(self, node_index: int, value: float):
        self.node_index = node_index
        self.value = value
        super().__init__(
            f"boundary flux is {value:.6g} <= 0 at node {node_index}; "
            "the data violate the sign hypotheses"
        )


class HypothesisError(DegheatError, RuntimeError):
    """Input data fail the solvability hypotheses (run the validator for detail)."""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)
