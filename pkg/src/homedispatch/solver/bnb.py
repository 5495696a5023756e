"""Best-bound branch and bound over the simplex engine.

Binary variables are branched by fixing bounds; each node re-solves with the
parent's basis as a warm start, so a node costs a handful of dual-infeasible
pivots rather than a full cold solve.  Nodes are explored best-bound first
with a last-in-first-out tie-break: when many nodes share a bound (typical
for indicator binaries that carry no objective weight) the search dives to
an incumbent instead of sweeping the tree breadth-first.  The most
fractional binary is branched, lowest index on ties; the fix-to-1 child is
explored before its sibling.

Before branching a node, a floor-and-fix heuristic tries to close it in two
extra LP solves.  First the node is re-solved with a tiny penalty on every
binary, which slides binaries that are fractional only through vertex
degeneracy down to the smallest values the constraints allow: indicators
backing an active big-M row stop at flow/M, pure slack indicators drop to
zero.  Every binary with a positive floor is then fixed to one, the rest to
zero, and the LP is solved once more.  If that solution's true objective
still matches the node bound the node is closed with it; otherwise the
candidate is kept as an ordinary incumbent (when it improves on the best
known) and branching proceeds, so the heuristic never affects correctness.
"""

from __future__ import annotations

import heapq

import numpy as np

from .model import (
    INFEASIBLE,
    NODE_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    Basis,
    LinearProgram,
    LpSolution,
    SolverError,
    SolverOptions,
)
from .simplex import SimplexEngine


def _gap_slack(incumbent: float, rel_gap: float) -> float:
    return max(rel_gap * abs(incumbent), 1e-9)


# give up on the bound-push heuristic after this many rejections
_PUSH_FAIL_CAP = 5


def solve_milp(lp: LinearProgram, options: SolverOptions | None = None,
               warm: Basis | None = None, backend=None) -> LpSolution:
    """Minimize ``lp`` with its binary variables forced to {0, 1}."""

    opts = options or SolverOptions()
    eng = SimplexEngine(lp, opts, backend=backend)
    n = lp.n_vars
    bin_idx = np.nonzero(lp.is_binary)[0]

    status, x, obj, root_basis, iters = eng.solve(warm=warm)
    total_iters = iters
    if bin_idx.size == 0 or status != OPTIMAL:
        return LpSolution(status, x, obj, nodes_explored=0 if bin_idx.size == 0 else 1,
                          iterations=total_iters, basis=root_basis)

    floor_c = lp.c.copy()
    floor_c[bin_idx] += 1e-6 * max(1.0, float(np.abs(lp.c).max()))
    push_fails = 0

    nodes = 1
    inc_x: np.ndarray | None = None
    inc_obj = np.inf
    heap: list = []
    counter = 0

    def try_floor_fix(obj_node: float, basis_node: Basis, lo_node: np.ndarray,
                      ub_node: np.ndarray) -> bool:
        """Floor the binaries, fix them integral, re-solve; True closes the node."""
        nonlocal inc_x, inc_obj, push_fails, total_iters
        st, x_f, _, basis_f, it_f = eng.solve(lo_node, ub_node, warm=basis_node,
                                              c=floor_c)
        total_iters += it_f
        if st != OPTIMAL:
            push_fails += 1
            return False
        target = (x_f[bin_idx] > opts.integrality_tol).astype(float)
        lo_fix = lo_node.copy()
        ub_fix = ub_node.copy()
        lo_fix[bin_idx] = target
        ub_fix[bin_idx] = target
        st, x_p, _, _, it_p = eng.solve(lo_fix, ub_fix, warm=basis_f)
        total_iters += it_p
        if st != OPTIMAL:
            push_fails += 1
            return False
        true_obj = float(lp.c @ x_p)
        if true_obj < inc_obj - 1e-12:
            inc_obj = true_obj
            inc_x = x_p.copy()
        if true_obj <= obj_node + 1e-9 * max(1.0, abs(obj_node)):
            return True  # incumbent attains the node bound
        push_fails += 1
        return False

    def consider(x_node: np.ndarray, obj_node: float, basis_node: Basis,
                 lo_node: np.ndarray, ub_node: np.ndarray) -> None:
        nonlocal inc_x, inc_obj, counter
        frac = np.abs(x_node[bin_idx] - np.rint(x_node[bin_idx]))
        if frac.size == 0 or frac.max() <= opts.integrality_tol:
            if obj_node < inc_obj - 1e-12:
                inc_obj = obj_node
                inc_x = x_node.copy()
            return
        if push_fails < _PUSH_FAIL_CAP and try_floor_fix(obj_node, basis_node,
                                                         lo_node, ub_node):
            return
        j = int(bin_idx[int(np.argmax(frac))])
        # negated counter: equal-bound nodes pop newest first, so the later
        # push (fix-to-1) is explored first and the search dives
        down_ub = ub_node.copy()
        down_ub[j] = 0.0
        heapq.heappush(heap, (obj_node, -counter, lo_node.copy(), down_ub, basis_node))
        counter += 1
        up_lo = lo_node.copy()
        up_lo[j] = 1.0
        heapq.heappush(heap, (obj_node, -counter, up_lo, ub_node.copy(), basis_node))
        counter += 1

    consider(x, obj, root_basis, lp.lo.copy(), lp.ub.copy())

    hit_limit = False
    while heap:
        bound, _, lo_node, ub_node, basis_node = heapq.heappop(heap)
        if inc_x is not None and bound >= inc_obj - _gap_slack(inc_obj, opts.relative_gap):
            continue
        if nodes >= opts.max_nodes:
            hit_limit = True
            break
        st, x_node, obj_node, basis_out, iters = eng.solve(lo_node, ub_node, warm=basis_node)
        nodes += 1
        total_iters += iters
        if st == INFEASIBLE:
            continue
        if st == UNBOUNDED:
            # tightening bounds cannot open a ray the root did not have
            raise SolverError("unbounded node below a bounded root relaxation")
        if inc_x is not None and obj_node >= inc_obj - _gap_slack(inc_obj, opts.relative_gap):
            continue
        consider(x_node, obj_node, basis_out, lo_node, ub_node)

    if inc_x is None:
        final = NODE_LIMIT if hit_limit else INFEASIBLE
        return LpSolution(final, None, float("nan"), nodes_explored=nodes,
                          iterations=total_iters, basis=root_basis)
    if hit_limit:
        best_open = min((item[0] for item in heap), default=np.inf)
        closed = best_open >= inc_obj - _gap_slack(inc_obj, opts.relative_gap)
        final = OPTIMAL if closed else NODE_LIMIT
    else:
        final = OPTIMAL
    return LpSolution(final, inc_x, float(inc_obj), nodes_explored=nodes,
                      iterations=total_iters, basis=root_basis)
