"""Iterative solvers for generalized Sylvester matrix equations.

Solves ``A X + X B^T + sum_i N_i X M_i^T = C`` by fixed-point iteration,
matrix Anderson acceleration, a Neumann-series preconditioner and
alternating combinations of these, all working in the real Schur basis of
``A`` and ``B``.
"""

from gensylv.errors import (
    DimensionError,
    GenSylvError,
    NearSingularOperatorError,
    SchurError,
    SingularSystemError,
    SizeCapError,
    ZeroMatrixError,
)
from gensylv.problem import GeneralizedSylvesterProblem, TransformedProblem, transform
from gensylv.solvers import Method, SolveOutcome, SolverConfig, Status, solve

__all__ = [
    "DimensionError",
    "GenSylvError",
    "GeneralizedSylvesterProblem",
    "Method",
    "NearSingularOperatorError",
    "SchurError",
    "SingularSystemError",
    "SizeCapError",
    "SolveOutcome",
    "SolverConfig",
    "Status",
    "TransformedProblem",
    "ZeroMatrixError",
    "solve",
    "transform",
]
