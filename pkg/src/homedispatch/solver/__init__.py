"""Self-contained bounded-variable LP/MILP solver.

Public surface: LinearProgram, LpSolution, SolverOptions, solve_lp and
solve_milp.  The engine is a revised primal simplex with a product-form
inverse over a periodically refactorized sparse LU of the basis; binaries are
handled by best-bound branch and bound.
"""

from .model import (
    EQ,
    GE,
    INFEASIBLE,
    LE,
    NODE_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    Basis,
    LinearProgram,
    LpSolution,
    SolverError,
    SolverOptions,
    lp_to_text,
)
from .bnb import solve_milp
from .kernels import get_backend
from .simplex import SimplexEngine, solve_lp

__all__ = [
    "LinearProgram",
    "LpSolution",
    "SolverOptions",
    "SolverError",
    "Basis",
    "SimplexEngine",
    "solve_lp",
    "solve_milp",
    "lp_to_text",
    "get_backend",
    "LE",
    "EQ",
    "GE",
    "OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED",
    "NODE_LIMIT",
]
