"""Global minimization of quartic polynomials by box smoothing and path tracking."""
from .bench import BatchStats, ProblemSpec, batch_run, builtin_problem, emit_report, random_normal
from .convexify import Classification, classify_C, t0_ball, t0_normal
from .poly import MonomialPoly, NormalQuartic, ParseError, load_poly, parse_poly
from .solve import SolveReport, SolverConfig, run_algorithm1, trajectory
from .steklov import steklov_build, steklov_eval

__version__ = "0.1.0"

__all__ = [
    "BatchStats", "ProblemSpec", "batch_run", "builtin_problem", "emit_report", "random_normal",
    "Classification", "classify_C", "t0_ball", "t0_normal",
    "MonomialPoly", "NormalQuartic", "ParseError", "load_poly", "parse_poly",
    "SolveReport", "SolverConfig", "run_algorithm1", "trajectory",
    "steklov_build", "steklov_eval",
]
