"""Fitted difference scheme for semilinear singularly perturbed reaction-diffusion problems."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DimensionMismatch,
    DomainError,
    LayerfitError,
    MissingExactSolution,
    NoConvergence,
    NonFiniteValue,
    ParameterError,
    SingularMatrix,
)
from .problems import ProblemSpec, builtin_test_problem, get_problem  # noqa: E402
from .mesh import Bakhvalov, Liseikin, Mesh, ModifiedShishkin, Shishkin, generate  # noqa: E402
from .scheme import jacobian, residual  # noqa: E402
from .solver import SolverConfig, SolverResult, newton_solve  # noqa: E402
from .analysis import conv_order, max_error, sweep  # noqa: E402

__all__ = [
    "__version__",
    "LayerfitError",
    "DomainError",
    "ParameterError",
    "DimensionMismatch",
    "NonFiniteValue",
    "SingularMatrix",
    "MissingExactSolution",
    "NoConvergence",
    "ProblemSpec",
    "builtin_test_problem",
    "get_problem",
    "Shishkin",
    "ModifiedShishkin",
    "Bakhvalov",
    "Liseikin",
    "Mesh",
    "generate",
    "residual",
    "jacobian",
    "SolverConfig",
    "SolverResult",
    "newton_solve",
    "max_error",
    "conv_order",
    "sweep",
]
