"""Bounded-variable revised primal simplex with a product-form inverse.

Rows are brought to equality form by giving every row i a logical variable
y_i with  A x + y = b  and bounds derived from the relation: "<=" gives
y in [0, inf), ">=" gives y in (-inf, 0], "=" pins y at 0.  The cold-start
basis is the identity over the logicals, so no artificial variables are
needed; a composite long-step phase 1 drives bound violations of basic
variables to zero and doubles as the repair path for warm starts.

The basis inverse is kept as a chain of eta transforms over a periodically
refreshed sparse LU factorization (scipy splu).  Pricing is Devex with a
full reduced-cost recompute each iteration; after a run of degenerate steps
the engine falls back to Bland's least-index rule until progress resumes.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .kernels import get_backend
from .model import (
    EQ,
    GE,
    INFEASIBLE,
    LE,
    OPTIMAL,
    UNBOUNDED,
    Basis,
    LinearProgram,
    LpSolution,
    SolverError,
    SolverOptions,
)

# variable statuses
NB_LO = 0
NB_UB = 1
NB_FREE = 2
BASIC = 3

# violations below this are treated as exact feasibility inside phase 1
_TOL_INF = 1e-9
_DEGENERATE_STEP = 1e-12


class SimplexEngine:
    """Reusable engine bound to one constraint matrix.

    ``solve`` accepts per-call structural bounds and a warm-start basis, so
    branch-and-bound nodes and day-over-day resolves share the normalized
    matrix and kernel state.
    """

    def __init__(self, lp: LinearProgram, options: SolverOptions | None = None,
                 backend=None):
        self.opts = options or SolverOptions()
        self.kern = backend if backend is not None else get_backend()
        a = lp.a_matrix
        self.m, self.n = a.shape
        self.ncols = self.n + self.m
        self.a = a
        self.indptr = a.indptr.astype(np.int64)
        self.indices = a.indices.astype(np.int64)
        self.data = a.data.astype(np.float64)
        self.b = lp.rhs
        self.c = lp.c
        self._cscale = max(1.0, float(np.abs(lp.c).max())) if lp.c.size else 1.0

        log_lo = np.where(lp.relations == GE, -np.inf, 0.0)
        log_ub = np.where(lp.relations == LE, np.inf, 0.0)
        self._lo0 = np.concatenate((lp.lo, log_lo))
        self._ub0 = np.concatenate((lp.ub, log_ub))

        mi = self.opts.max_iterations
        self.max_iters = mi if mi > 0 else 50 * (self.m + self.n) + 1000

        cap = self.opts.refactor_every + 1
        self._eta_z = np.empty((cap, self.m))
        self._eta_r = np.empty(cap, dtype=np.int64)
        self._eta_k = 0
        self._factor = None
        self._identity_basis = False

    # -- linear algebra ----------------------------------------------------

    def _ftran(self, v: np.ndarray) -> np.ndarray:
        x = v.copy() if self._factor is None else self._factor.solve(v)
        self.kern.ftran_etas(self._eta_z, self._eta_r, self._eta_k, x)
        return x

    def _btran(self, v: np.ndarray) -> np.ndarray:
        y = v.copy()
        self.kern.btran_etas(self._eta_z, self._eta_r, self._eta_k, y)
        if self._factor is not None:
            y = self._factor.solve(y, trans="T")
        return y

    def _dense_col(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        if j < self.n:
            s, e = self.indptr[j], self.indptr[j + 1]
            col[self.indices[s:e]] = self.data[s:e]
        else:
            col[j - self.n] = 1.0
        return col

    def _factor_basis(self, basic: np.ndarray) -> None:
        self._eta_k = 0
        if np.array_equal(basic, self.n + np.arange(self.m)):
            self._factor = None
            self._identity_basis = True
            return
        self._identity_basis = False
        struct_pos = np.nonzero(basic < self.n)[0]
        log_pos = np.nonzero(basic >= self.n)[0]
        parts = []
        if struct_pos.size:
            parts.append(self.a[:, basic[struct_pos]])
        if log_pos.size:
            rows = basic[log_pos] - self.n
            eye_cols = sp.csc_matrix(
                (np.ones(log_pos.size), (rows, np.arange(log_pos.size))),
                shape=(self.m, log_pos.size),
            )
            parts.append(eye_cols)
        concat = parts[0] if len(parts) == 1 else sp.hstack(parts, format="csc")
        # concat column k belongs at basis position order[k]; invert so that
        # column p of the factorized matrix is the column of basic[p]
        order = np.concatenate((struct_pos, log_pos))
        inv = np.empty(self.m, dtype=np.int64)
        inv[order] = np.arange(self.m)
        self._factor = splu(sp.csc_matrix(concat[:, inv]))

    def _recompute_basics(self, x, basic, lo_f, ub_f, status):
        x[basic] = 0.0
        act = self.a @ x[: self.n] + x[self.n:]
        x[basic] = self._ftran(self.b - act)

    # -- pricing -----------------------------------------------------------

    def _price(self, d, status, enterable, w, bland, tol_d):
        elig = (
            ((status == NB_LO) & (d < -tol_d))
            | ((status == NB_UB) & (d > tol_d))
        ) & enterable
        elig |= (status == NB_FREE) & (np.abs(d) > tol_d)
        if not elig.any():
            return -1, 0.0
        if bland:
            q = int(np.argmax(elig))
        else:
            score = np.where(elig, d * d / w, -1.0)
            q = int(np.argmax(score))
        if status[q] == NB_LO:
            sgn = 1.0
        elif status[q] == NB_UB:
            sgn = -1.0
        else:
            sgn = 1.0 if d[q] < 0.0 else -1.0
        return q, sgn

    def _devex_update(self, w, z, pos, q, leaving):
        aq = z[pos]
        e = np.zeros(self.m)
        e[pos] = 1.0
        arow = self._btran(e)
        alpha = np.empty(self.ncols)
        alpha[: self.n] = self.kern.col_dots(self.indptr, self.indices, self.data, arow)
        alpha[self.n:] = arow
        wq = max(w[q], 1.0)
        np.maximum(w, (alpha / aq) ** 2 * wq, out=w)
        w[leaving] = max(wq / (aq * aq), 1.0)
        w[q] = 1.0
        if w.max() > 1e7:
            w[:] = 1.0

    # -- main loop ---------------------------------------------------------

    def solve(self, lo: np.ndarray | None = None, ub: np.ndarray | None = None,
              warm: Basis | None = None, c: np.ndarray | None = None):
        """Returns (status, x_structural|None, objective, Basis, iterations).

        ``c`` replaces the stored objective for this call only; the returned
        objective is evaluated against whichever vector was used.
        """

        m, n, ncols = self.m, self.n, self.ncols
        opts = self.opts
        lo_f = self._lo0.copy()
        ub_f = self._ub0.copy()
        if lo is not None:
            lo_f[:n] = lo
        if ub is not None:
            ub_f[:n] = ub
        if np.any(lo_f > ub_f):
            raise ValueError("crossed bounds passed to solve")
        if c is None:
            c_use = self.c
            c_full = self._c_full()
            cscale = self._cscale
        else:
            c_use = np.asarray(c, dtype=float)
            if c_use.shape != (n,):
                raise ValueError("objective override has wrong length")
            c_full = np.concatenate((c_use, np.zeros(m)))
            cscale = max(1.0, float(np.abs(c_use).max())) if n else 1.0
        if m == 0:
            return self._solve_unconstrained(lo_f, ub_f, c_use)

        status, basic = self._init_basis(warm, lo_f, ub_f)
        x = self._init_values(status, lo_f, ub_f)
        try:
            self._factor_basis(basic)
        except RuntimeError:
            # singular warm basis: fall back to the all-logical start
            status, basic = self._init_basis(None, lo_f, ub_f)
            x = self._init_values(status, lo_f, ub_f)
            self._factor_basis(basic)
        self._recompute_basics(x, basic, lo_f, ub_f, status)

        enterable = lo_f < ub_f
        w = np.ones(ncols)
        phase = 1
        bland = False
        stall = 0
        repair = 0
        iters = 0
        kern = self.kern

        while True:
            if iters >= self.max_iters:
                raise SolverError(f"iteration limit {self.max_iters} exceeded")
            if self._eta_k >= opts.refactor_every:
                self._refresh(x, basic, lo_f, ub_f, status)

            xb = x[basic]
            lob = lo_f[basic]
            ubb = ub_f[basic]
            viol_max = max(
                float(np.max(lob - xb, initial=0.0)),
                float(np.max(xb - ubb, initial=0.0)),
            )
            if phase == 1 and viol_max <= _TOL_INF:
                phase = 2
                w[:] = 1.0
                bland = False
                stall = 0

            if phase == 1:
                cb = np.where(xb < lob - _TOL_INF, -1.0, 0.0)
                cb += np.where(xb > ubb + _TOL_INF, 1.0, 0.0)
                cc = None
                tol_d = opts.dual_tol
            else:
                cb = c_full[basic]
                cc = c_use
                tol_d = opts.dual_tol * cscale

            y = self._btran(cb)
            d = np.empty(ncols)
            dots = kern.col_dots(self.indptr, self.indices, self.data, y)
            d[:n] = (cc - dots) if cc is not None else -dots
            d[n:] = -y

            q, sgn = self._price(d, status, enterable, w, bland, tol_d)
            if q < 0:
                if phase == 1:
                    if viol_max <= opts.feasibility_tol:
                        phase = 2
                        w[:] = 1.0
                        continue
                    return INFEASIBLE, None, float("nan"), Basis(status.copy(), basic.copy()), iters
                self._refresh(x, basic, lo_f, ub_f, status)
                over = max(
                    float(np.max(lo_f - x, initial=0.0)),
                    float(np.max(x - ub_f, initial=0.0)),
                )
                if over > opts.feasibility_tol and repair < 2:
                    repair += 1
                    phase = 1
                    continue
                if over > 10 * opts.feasibility_tol:
                    raise SolverError(f"optimal basis violates bounds by {over:.3e}")
                obj = float(c_use @ x[:n])
                return OPTIMAL, x[:n].copy(), obj, Basis(status.copy(), basic.copy()), iters

            iters += 1
            z = self._ftran(self._dense_col(q))
            eta = sgn * z
            own_range = ub_f[q] - lo_f[q]
            if phase == 1:
                t, pos, side = kern.ratio_phase1(
                    xb, lob, ubb, eta, own_range, q, _TOL_INF, opts.pivot_tol,
                    sgn * d[q], bland, basic,
                )
                if pos == -2:
                    raise SolverError("phase-1 line search found no minimizer")
            else:
                t, pos, side = kern.ratio_phase2(
                    xb, lob, ubb, eta, own_range, opts.pivot_tol, bland, basic,
                )
                if pos == -2:
                    return UNBOUNDED, None, -np.inf, Basis(status.copy(), basic.copy()), iters

            x[basic] = xb - t * eta
            if pos == -1:
                # entering variable runs to its opposite bound: no basis change
                if status[q] == NB_LO:
                    status[q] = NB_UB
                    x[q] = ub_f[q]
                else:
                    status[q] = NB_LO
                    x[q] = lo_f[q]
            else:
                leaving = int(basic[pos])
                x[q] = x[q] + sgn * t
                x[leaving] = lob[pos] if side == 0 else ubb[pos]
                if not bland:
                    self._devex_update(w, z, pos, q, leaving)
                status[q] = BASIC
                status[leaving] = NB_LO if side == 0 else NB_UB
                basic[pos] = q
                self._eta_z[self._eta_k] = z
                self._eta_r[self._eta_k] = pos
                self._eta_k += 1

            if t <= _DEGENERATE_STEP:
                stall += 1
                if stall >= opts.stall_limit and not bland:
                    bland = True
            else:
                stall = 0
                if bland:
                    bland = False
                    w[:] = 1.0

    # -- helpers -----------------------------------------------------------

    def _c_full(self) -> np.ndarray:
        c = getattr(self, "_c_full_cache", None)
        if c is None:
            c = np.concatenate((self.c, np.zeros(self.m)))
            self._c_full_cache = c
        return c

    def _init_basis(self, warm: Basis | None, lo_f, ub_f):
        m, n, ncols = self.m, self.n, self.ncols
        if warm is not None and self._warm_ok(warm):
            status = warm.status.astype(np.int8).copy()
            basic = warm.basic.astype(np.int64).copy()
        else:
            status = np.empty(ncols, dtype=np.int8)
            status[:] = NB_LO
            basic = n + np.arange(m, dtype=np.int64)
            status[basic] = BASIC
        nb = status != BASIC
        lo_inf = ~np.isfinite(lo_f)
        ub_inf = ~np.isfinite(ub_f)
        # repair statuses that point at a bound which is not finite
        swap_lo = nb & (status == NB_LO) & lo_inf
        status[swap_lo & ~ub_inf] = NB_UB
        status[swap_lo & ub_inf] = NB_FREE
        swap_ub = nb & (status == NB_UB) & ub_inf
        status[swap_ub & ~lo_inf] = NB_LO
        status[swap_ub & lo_inf] = NB_FREE
        return status, basic

    def _warm_ok(self, warm: Basis) -> bool:
        if warm.status.shape != (self.ncols,) or warm.basic.shape != (self.m,):
            return False
        if (warm.status == BASIC).sum() != self.m:
            return False
        b = warm.basic
        if b.min(initial=0) < 0 or b.max(initial=0) >= self.ncols:
            return False
        if np.unique(b).size != self.m:
            return False
        return bool(np.all(warm.status[b] == BASIC))

    def _init_values(self, status, lo_f, ub_f) -> np.ndarray:
        x = np.zeros(self.ncols)
        at_lo = status == NB_LO
        at_ub = status == NB_UB
        x[at_lo] = lo_f[at_lo]
        x[at_ub] = ub_f[at_ub]
        return x

    def _refresh(self, x, basic, lo_f, ub_f, status):
        self._factor_basis(basic)
        self._recompute_basics(x, basic, lo_f, ub_f, status)

    def _solve_unconstrained(self, lo_f, ub_f, c):
        ray = ((c < 0) & ~np.isfinite(ub_f[: self.n])) | ((c > 0) & ~np.isfinite(lo_f[: self.n]))
        basis = Basis(np.full(self.ncols, NB_LO, dtype=np.int8), np.empty(0, dtype=np.int64))
        if ray.any():
            return UNBOUNDED, None, -np.inf, basis, 0
        x = np.where(c > 0, lo_f[: self.n], ub_f[: self.n])
        zero = c == 0.0
        pick = np.where(np.isfinite(lo_f[: self.n]), lo_f[: self.n],
                        np.where(np.isfinite(ub_f[: self.n]), ub_f[: self.n], 0.0))
        x[zero] = pick[zero]
        return OPTIMAL, x, float(c @ x), basis, 0


def solve_lp(lp: LinearProgram, options: SolverOptions | None = None,
             warm: Basis | None = None, backend=None) -> LpSolution:
    """Solve the continuous relaxation of ``lp`` (binary marks are ignored)."""

    eng = SimplexEngine(lp, options, backend=backend)
    status, x, obj, basis, iters = eng.solve(warm=warm)
    return LpSolution(status, x, obj, nodes_explored=0, iterations=iters, basis=basis)
