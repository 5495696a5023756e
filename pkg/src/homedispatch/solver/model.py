"""Problem and solution containers for the LP/MILP solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

# Row relation codes.
LE = -1
EQ = 0
GE = 1

_REL_FROM_STR = {"<=": LE, "=": EQ, "==": EQ, ">=": GE}
_REL_TO_STR = {LE: "<=", EQ: "=", GE: ">="}

# Solution statuses.
OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NODE_LIMIT = "node_limit"


class SolverError(RuntimeError):
    """Internal solver failure (singular basis, residual blow-up, cycling)."""


def _as_relation_codes(relations, m: int) -> np.ndarray:
    rel = np.asarray(relations)
    if rel.shape != (m,):
        raise ValueError(f"relations must have shape ({m},), got {rel.shape}")
    if rel.dtype.kind in "US":
        try:
            codes = np.array([_REL_FROM_STR[str(r)] for r in rel], dtype=np.int8)
        except KeyError as exc:
            raise ValueError(f"unknown relation {exc.args[0]!r}") from None
        return codes
    codes = rel.astype(np.int8)
    if not np.all(np.isin(codes, (LE, EQ, GE))):
        raise ValueError("relation codes must be in {-1, 0, 1}")
    return codes


@dataclass
class LinearProgram:
    """min c.x  s.t.  A x (<=,=,>=) rhs,  lo <= x <= ub, some x binary.

    ``a_matrix`` may be a dense ndarray or any scipy sparse matrix; it is
    normalized to CSC on construction.  ``is_binary`` marks integer variables
    that must end at 0 or 1; their bounds must lie inside [0, 1].
    """

    c: np.ndarray
    a_matrix: object
    relations: np.ndarray
    rhs: np.ndarray
    lo: np.ndarray
    ub: np.ndarray
    is_binary: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=np.float64)
        if self.c.ndim != 1 or self.c.size == 0:
            raise ValueError("c must be a non-empty 1-d array")
        n = self.c.size
        if sp.issparse(self.a_matrix):
            a = sp.csc_matrix(self.a_matrix, dtype=np.float64)
        else:
            a = sp.csc_matrix(np.asarray(self.a_matrix, dtype=np.float64))
        if a.shape[1] != n:
            raise ValueError(f"A has {a.shape[1]} columns, expected {n}")
        a.sum_duplicates()
        self.a_matrix = a
        m = a.shape[0]
        self.rhs = np.asarray(self.rhs, dtype=np.float64)
        if self.rhs.shape != (m,):
            raise ValueError(f"rhs must have shape ({m},)")
        self.relations = _as_relation_codes(self.relations, m)
        self.lo = np.asarray(self.lo, dtype=np.float64)
        self.ub = np.asarray(self.ub, dtype=np.float64)
        if self.lo.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("lo and ub must match the number of variables")
        if np.any(self.lo > self.ub):
            bad = int(np.argmax(self.lo > self.ub))
            raise ValueError(f"variable {bad}: lower bound exceeds upper bound")
        if self.is_binary is None:
            self.is_binary = np.zeros(n, dtype=bool)
        else:
            self.is_binary = np.asarray(self.is_binary, dtype=bool)
            if self.is_binary.shape != (n,):
                raise ValueError("is_binary must match the number of variables")
        if np.any(self.is_binary & ((self.lo < -1e-12) | (self.ub > 1 + 1e-12))):
            raise ValueError("binary variables need bounds inside [0, 1]")
        for name, arr in (("c", self.c), ("rhs", self.rhs)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        if not np.all(np.isfinite(self.a_matrix.data)):
            raise ValueError("A contains non-finite entries")

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.rhs.size


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None
    objective: float
    nodes_explored: int = 0
    iterations: int = 0
    basis: "Basis | None" = None   # resumable state for warm starts

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass(frozen=True)
class SolverOptions:
    feasibility_tol: float = 1e-7
    integrality_tol: float = 1e-6
    relative_gap: float = 1e-6
    max_nodes: int = 100_000
    max_iterations: int = 0        # 0 -> scale with problem size
    refactor_every: int = 64
    dual_tol: float = 1e-9
    pivot_tol: float = 1e-9
    stall_limit: int = 500         # degenerate steps before Bland's rule

    def __post_init__(self) -> None:
        if self.feasibility_tol <= 0 or self.integrality_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.relative_gap < 0:
            raise ValueError("relative_gap must be non-negative")
        if self.max_nodes < 1:
            raise ValueError("max_nodes must be at least 1")
        if self.refactor_every < 1:
            raise ValueError("refactor_every must be at least 1")


@dataclass
class Basis:
    """Resumable simplex state: variable statuses plus basic variable list.

    ``status`` covers structural variables then row logicals (n + m entries);
    ``basic`` holds the variable occupying each basis position.
    """

    status: np.ndarray
    basic: np.ndarray

    def copy(self) -> "Basis":
        return Basis(self.status.copy(), self.basic.copy())


def lp_to_text(lp: LinearProgram, max_rows: int = 40) -> str:
    """Human-readable dump of a model, for debugging small instances."""

    lines = ["min " + " + ".join(f"{ci:g}*x{j}" for j, ci in enumerate(lp.c) if ci != 0.0)]
    a = lp.a_matrix.tocsr()
    for i in range(min(lp.n_rows, max_rows)):
        row = a.getrow(i)
        terms = " + ".join(f"{v:g}*x{j}" for j, v in zip(row.indices, row.data))
        lines.append(f"r{i}: {terms or '0'} {_REL_TO_STR[int(lp.relations[i])]} {lp.rhs[i]:g}")
    if lp.n_rows > max_rows:
        lines.append(f"... ({lp.n_rows - max_rows} more rows)")
    for j in range(lp.n_vars):
        tag = " (binary)" if lp.is_binary[j] else ""
        lines.append(f"x{j} in [{lp.lo[j]:g}, {lp.ub[j]:g}]{tag}")
    return "\n".join(lines)
