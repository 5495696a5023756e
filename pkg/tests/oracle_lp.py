"""Brute-force optimum finder for small boxed LPs and binary MILPs.

Independent of the production solver: enumerates every candidate active set
(tight row subset x free variable subset x bound pattern for the rest),
solves the square subsystem, filters by feasibility, and takes the best
objective.  With all variable bounds finite the feasible region is a
polytope, every optimum sits on an enumerated point, and no unbounded case
can arise.  Intended for n <= 8 variables and m <= 3 rows.
"""

from __future__ import annotations

import itertools

import numpy as np

OPT = "optimal"
INF = "infeasible"


def enumerate_lp(c, a, rel, b, lo, ub, tol=1e-7):
    c = np.asarray(c, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = np.asarray(lo, dtype=float)
    ub = np.asarray(ub, dtype=float)
    rel = np.asarray(rel)
    n, m = c.size, b.size
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(ub))):
        raise ValueError("oracle requires finite variable bounds")

    best_obj = np.inf
    best_x = None
    for k in range(0, min(n, m) + 1):
        for tight in itertools.combinations(range(m), k):
            for free in itertools.combinations(range(n), k):
                fixed = [j for j in range(n) if j not in free]
                for pattern in itertools.product((0, 1), repeat=len(fixed)):
                    x = np.empty(n)
                    for j, p in zip(fixed, pattern):
                        x[j] = lo[j] if p == 0 else ub[j]
                    if k:
                        sub = a[np.ix_(tight, free)]
                        rhs = b[list(tight)]
                        if fixed:
                            rhs = rhs - a[np.ix_(tight, fixed)] @ x[fixed]
                        try:
                            sol = np.linalg.solve(sub, rhs)
                        except np.linalg.LinAlgError:
                            continue
                        if not np.all(np.isfinite(sol)):
                            continue
                        x[list(free)] = sol
                    if np.any(x < lo - tol) or np.any(x > ub + tol):
                        continue
                    resid = a @ x - b
                    if np.any((rel == -1) & (resid > tol)):
                        continue
                    if np.any((rel == 1) & (resid < -tol)):
                        continue
                    if np.any((rel == 0) & (np.abs(resid) > tol)):
                        continue
                    obj = float(c @ x)
                    if obj < best_obj:
                        best_obj = obj
                        best_x = x.copy()
    if best_x is None:
        return INF, None, float("nan")
    return OPT, best_x, best_obj


def enumerate_milp(c, a, rel, b, lo, ub, is_bin, tol=1e-7):
    is_bin = np.asarray(is_bin, dtype=bool)
    idx = np.nonzero(is_bin)[0]
    if idx.size == 0:
        return enumerate_lp(c, a, rel, b, lo, ub, tol)
    best_obj = np.inf
    best_x = None
    for bits in itertools.product((0.0, 1.0), repeat=idx.size):
        lo2 = np.array(lo, dtype=float)
        ub2 = np.array(ub, dtype=float)
        lo2[idx] = bits
        ub2[idx] = bits
        if np.any(lo2 > np.asarray(ub, dtype=float) + 1e-12):
            continue
        st, x, obj = enumerate_lp(c, a, rel, b, lo2, ub2, tol)
        if st == OPT and obj < best_obj:
            best_obj = obj
            best_x = x
    if best_x is None:
        return INF, None, float("nan")
    return OPT, best_x, best_obj


def random_instance(rng, with_binaries=False):
    """Seeded small instance; roughly 3 in 4 are feasible by construction."""

    n = int(rng.integers(2, 7))
    m = int(rng.integers(1, 4))
    a = np.round(rng.normal(size=(m, n)), 3)
    a[rng.random((m, n)) < 0.25] = 0.0
    for i in range(m):
        if not a[i].any():
            a[i, int(rng.integers(0, n))] = 1.0
    lo = np.round(rng.uniform(-3.0, 0.0, n), 3)
    ub = lo + np.round(rng.uniform(0.5, 4.0, n), 3)
    c = np.round(rng.normal(size=n), 3)
    rel = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=m, p=[0.5, 0.2, 0.3])
    if rng.random() < 0.75:
        x0 = lo + rng.uniform(0.15, 0.85, n) * (ub - lo)
        act = a @ x0
        b = act.copy()
        b[rel == -1] += rng.uniform(0.05, 2.0, int((rel == -1).sum()))
        b[rel == 1] -= rng.uniform(0.05, 2.0, int((rel == 1).sum()))
    else:
        b = np.round(rng.normal(scale=2.0, size=m), 3)
    is_bin = np.zeros(n, dtype=bool)
    if with_binaries:
        k = int(rng.integers(1, min(3, n) + 1))
        pick = rng.choice(n, size=k, replace=False)
        is_bin[pick] = True
        lo[pick] = 0.0
        ub[pick] = 1.0
    return c, a, rel, b, lo, ub, is_bin
