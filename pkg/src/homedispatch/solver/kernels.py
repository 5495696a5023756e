"""Hot numeric kernels for the simplex engine, in two interchangeable flavors.

The numba backend jit-compiles tight loops; the numpy backend is a pure
vectorized fallback with the same call signatures and tie-breaking semantics
within itself.  Selection: ``get_backend()`` honors the HOMEDISPATCH_NO_NUMBA
environment variable (any of "1", "true", "yes" disables numba) and silently
falls back to numpy when numba is not importable.

Kernel contracts (shared by both backends):

``ftran_etas(zs, rs, k, x)``
    Apply k product-form eta transforms in append order, in place.
    Eta i pivots on row rs[i] with column zs[i]:  t = x[r]/z[r];
    x -= t*z; x[r] = t.

``btran_etas(zs, rs, k, y)``
    Transposed application in reverse order: only component r changes,
    y[r] -= (z.y - y[r]) / z[r].

``col_dots(indptr, indices, data, y)``
    out[j] = column_j . y over a CSC matrix (structural columns).

``ratio_phase2(xb, lob, ubb, eta, own_range, pivot_tol, bland, basic)``
    Two-sided bounded ratio test on the feasible basis.  Basic values move
    as x_B(t) = x_B - t*eta.  Returns (t, pos, side): pos >= 0 pivots out
    the basic at that position (side 0 -> lands on lower bound, 1 -> upper),
    pos == -1 is a bound flip of the entering variable, pos == -2 signals
    an unbounded direction.

``ratio_phase1(xb, lob, ubb, eta, own_range, q_var, feas_tol, pivot_tol,
               slope0, bland, basic)``
    Long-step piecewise-linear line search minimizing total bound violation.
    Walks break points in increasing t accumulating slope until it turns
    non-negative.  Same return convention; pos == -2 means no minimizer was
    found (numerical trouble upstream).
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

_OWN_SLOPE = 1e300   # sentinel slope: the entering column's own far bound stops the walk


# ---------------------------------------------------------------------------
# numpy reference implementations

def _np_ftran_etas(zs, rs, k, x):
    for i in range(k):
        r = rs[i]
        z = zs[i]
        t = x[r] / z[r]
        x -= t * z
        x[r] = t


def _np_btran_etas(zs, rs, k, y):
    for i in range(k - 1, -1, -1):
        r = rs[i]
        z = zs[i]
        y[r] -= (z @ y - y[r]) / z[r]


def _np_col_dots(indptr, indices, data, y):
    # segmented sums via cumsum keeps this O(nnz) without a python loop
    vals = data * y[indices]
    cs = np.concatenate((np.zeros(1), np.cumsum(vals)))
    return cs[indptr[1:]] - cs[indptr[:-1]]


def _np_ratio_phase2(xb, lob, ubb, eta, own_range, pivot_tol, bland, basic):
    dn = eta > pivot_tol
    up = eta < -pivot_tol
    with np.errstate(invalid="ignore"):
        r = np.full(xb.size, np.inf)
        r[dn] = (xb[dn] - lob[dn]) / eta[dn]
        r[up] = (xb[up] - ubb[up]) / eta[up]
    np.maximum(r, 0.0, out=r)
    t_block = r.min() if r.size else np.inf
    if own_range <= t_block:
        if not np.isfinite(own_range):
            return np.inf, -2, 0
        return own_range, -1, 0
    near = r <= t_block + 1e-12
    idx = np.nonzero(near)[0]
    if bland:
        pos = idx[np.argmin(basic[idx])]
    else:
        pos = idx[np.argmax(np.abs(eta[idx]))]
    side = 0 if eta[pos] > 0.0 else 1
    return r[pos], int(pos), side


def _np_ratio_phase1(xb, lob, ubb, eta, own_range, q_var, feas_tol, pivot_tol,
                     slope0, bland, basic):
    dn = eta > pivot_tol
    up = eta < -pivot_tol
    above = xb > ubb + feas_tol
    below = xb < lob - feas_tol
    feas = ~above & ~below
    fin_lo = np.isfinite(lob)
    fin_ub = np.isfinite(ubb)

    cases = (
        (dn & above, ubb, 1),            # infeasible above, decreasing: hits ub
        (dn & above & fin_lo, lob, 0),   # ... then crosses lo
        (dn & feas & fin_lo, lob, 0),    # feasible, decreasing: crosses lo
        (up & below, lob, 0),            # infeasible below, increasing: hits lo
        (up & below & fin_ub, ubb, 1),   # ... then crosses ub
        (up & feas & fin_ub, ubb, 1),    # feasible, increasing: crosses ub
    )
    tv_parts, sl_parts, ps_parts, sd_parts = [], [], [], []
    for mask, bound, side in cases:
        idx = np.nonzero(mask)[0]
        if idx.size == 0:
            continue
        tv_parts.append((xb[idx] - bound[idx]) / eta[idx])
        sl_parts.append(np.abs(eta[idx]))
        ps_parts.append(idx)
        sd_parts.append(np.full(idx.size, side, dtype=np.int64))
    if np.isfinite(own_range):
        tv_parts.append(np.array([own_range]))
        sl_parts.append(np.array([_OWN_SLOPE]))
        ps_parts.append(np.array([-1], dtype=np.int64))
        sd_parts.append(np.array([0], dtype=np.int64))
    if not tv_parts:
        return 0.0, -2, 0
    tv = np.maximum(np.concatenate(tv_parts), 0.0)
    sl = np.concatenate(sl_parts)
    ps = np.concatenate(ps_parts)
    sd = np.concatenate(sd_parts)
    order = np.argsort(tv, kind="stable")
    if bland:
        tmin = tv[order[0]]
        cand = order[tv[order] <= tmin + 1e-12]
        var_ids = np.where(ps[cand] >= 0, basic[np.maximum(ps[cand], 0)], q_var)
        pick = cand[np.argmin(var_ids)]
        return tv[pick], int(ps[pick]), int(sd[pick])
    cum = slope0 + np.cumsum(sl[order])
    hit = cum >= -1e-12
    if not hit.any():
        return 0.0, -2, 0
    pick = order[int(np.argmax(hit))]
    return tv[pick], int(ps[pick]), int(sd[pick])


# ---------------------------------------------------------------------------
# backend assembly

_BACKENDS: dict[str, SimpleNamespace] = {}


def _numpy_backend() -> SimpleNamespace:
    return SimpleNamespace(
        name="numpy",
        ftran_etas=_np_ftran_etas,
        btran_etas=_np_btran_etas,
        col_dots=_np_col_dots,
        ratio_phase2=_np_ratio_phase2,
        ratio_phase1=_np_ratio_phase1,
    )


def _numba_backend() -> SimpleNamespace:
    from numba import njit

    @njit(cache=True)
    def ftran_etas(zs, rs, k, x):
        m = x.size
        for i in range(k):
            r = rs[i]
            t = x[r] / zs[i, r]
            for j in range(m):
                x[j] -= t * zs[i, j]
            x[r] = t

    @njit(cache=True)
    def btran_etas(zs, rs, k, y):
        m = y.size
        for i in range(k - 1, -1, -1):
            r = rs[i]
            s = 0.0
            for j in range(m):
                s += zs[i, j] * y[j]
            y[r] -= (s - y[r]) / zs[i, r]

    @njit(cache=True)
    def col_dots(indptr, indices, data, y):
        n = indptr.size - 1
        out = np.empty(n)
        for j in range(n):
            s = 0.0
            for k in range(indptr[j], indptr[j + 1]):
                s += data[k] * y[indices[k]]
            out[j] = s
        return out

    @njit(cache=True)
    def ratio_phase2(xb, lob, ubb, eta, own_range, pivot_tol, bland, basic):
        m = xb.size
        t_block = np.inf
        for p in range(m):
            e = eta[p]
            if e > pivot_tol:
                r = (xb[p] - lob[p]) / e
            elif e < -pivot_tol:
                r = (xb[p] - ubb[p]) / e
            else:
                continue
            if r < 0.0:
                r = 0.0
            if r < t_block:
                t_block = r
        if own_range <= t_block:
            if not np.isfinite(own_range):
                return np.inf, -2, 0
            return own_range, -1, 0
        pos = -1
        best_mag = -1.0
        best_var = 1 << 60
        t_pick = t_block
        for p in range(m):
            e = eta[p]
            if e > pivot_tol:
                r = (xb[p] - lob[p]) / e
            elif e < -pivot_tol:
                r = (xb[p] - ubb[p]) / e
            else:
                continue
            if r < 0.0:
                r = 0.0
            if r <= t_block + 1e-12:
                if bland:
                    if basic[p] < best_var:
                        best_var = basic[p]
                        pos = p
                        t_pick = r
                else:
                    a = abs(e)
                    if a > best_mag:
                        best_mag = a
                        pos = p
                        t_pick = r
        side = 0 if eta[pos] > 0.0 else 1
        return t_pick, pos, side

    @njit(cache=True)
    def ratio_phase1(xb, lob, ubb, eta, own_range, q_var, feas_tol, pivot_tol,
                     slope0, bland, basic):
        m = xb.size
        cap = 2 * m + 1
        tv = np.empty(cap)
        sl = np.empty(cap)
        ps = np.empty(cap, np.int64)
        sd = np.empty(cap, np.int64)
        ne = 0
        for p in range(m):
            e = eta[p]
            if e > pivot_tol:          # basic value decreases with t
                a = e
                if xb[p] > ubb[p] + feas_tol:
                    t = (xb[p] - ubb[p]) / e
                    tv[ne] = t if t > 0.0 else 0.0
                    sl[ne] = a; ps[ne] = p; sd[ne] = 1; ne += 1
                    if lob[p] > -np.inf:
                        t = (xb[p] - lob[p]) / e
                        tv[ne] = t if t > 0.0 else 0.0
                        sl[ne] = a; ps[ne] = p; sd[ne] = 0; ne += 1
                elif xb[p] < lob[p] - feas_tol:
                    pass               # moving away from a violated lower bound
                else:
                    if lob[p] > -np.inf:
                        t = (xb[p] - lob[p]) / e
                        tv[ne] = t if t > 0.0 else 0.0
                        sl[ne] = a; ps[ne] = p; sd[ne] = 0; ne += 1
            elif e < -pivot_tol:       # basic value increases with t
                a = -e
                if xb[p] < lob[p] - feas_tol:
                    t = (lob[p] - xb[p]) / (-e)
                    tv[ne] = t if t > 0.0 else 0.0
                    sl[ne] = a; ps[ne] = p; sd[ne] = 0; ne += 1
                    if ubb[p] < np.inf:
                        t = (ubb[p] - xb[p]) / (-e)
                        tv[ne] = t if t > 0.0 else 0.0
                        sl[ne] = a; ps[ne] = p; sd[ne] = 1; ne += 1
                elif xb[p] > ubb[p] + feas_tol:
                    pass
                else:
                    if ubb[p] < np.inf:
                        t = (ubb[p] - xb[p]) / (-e)
                        tv[ne] = t if t > 0.0 else 0.0
                        sl[ne] = a; ps[ne] = p; sd[ne] = 1; ne += 1
        if np.isfinite(own_range):
            tv[ne] = own_range
            sl[ne] = _OWN_SLOPE; ps[ne] = -1; sd[ne] = 0; ne += 1
        if ne == 0:
            return 0.0, -2, 0
        order = np.argsort(tv[:ne], kind="mergesort")
        if bland:
            tmin = tv[order[0]]
            best_var = 1 << 60
            pick = -1
            for ii in range(ne):
                i = order[ii]
                if tv[i] > tmin + 1e-12:
                    break
                v = q_var if ps[i] < 0 else basic[ps[i]]
                if v < best_var:
                    best_var = v
                    pick = i
            return tv[pick], ps[pick], sd[pick]
        s = slope0
        for ii in range(ne):
            i = order[ii]
            s += sl[i]
            if s >= -1e-12:
                return tv[i], ps[i], sd[i]
        return 0.0, -2, 0

    return SimpleNamespace(
        name="numba",
        ftran_etas=ftran_etas,
        btran_etas=btran_etas,
        col_dots=col_dots,
        ratio_phase2=ratio_phase2,
        ratio_phase1=ratio_phase1,
    )


def numba_disabled_by_env() -> bool:
    return os.environ.get("HOMEDISPATCH_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")


def get_backend(name: str | None = None) -> SimpleNamespace:
    """Return the kernel namespace; name in {"numba", "numpy", None}."""

    if name is None:
        name = "numpy" if numba_disabled_by_env() else "numba"
    if name in _BACKENDS:
        return _BACKENDS[name]
    if name == "numpy":
        backend = _numpy_backend()
    elif name == "numba":
        try:
            backend = _numba_backend()
        except ImportError:
            backend = _numpy_backend()
    else:
        raise ValueError(f"unknown backend {name!r}")
    _BACKENDS[name] = backend
    return backend
