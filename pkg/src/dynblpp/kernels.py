"""Hot DP kernels, each with a numba and a pure-numpy implementation.

All kernels work on *local* window coordinates: row ``r`` is line
``m0 + r`` of the window and column ``j`` is tick ``col0 + j`` of the
field's value array.  The public names dispatch on :data:`BACKEND`.
"""
from __future__ import annotations

import numpy as np

from ._accel import BACKEND, HAVE_NUMBA, njit

NEG_INF = -np.inf


# --------------------------------------------------------------------------
# single-path forward DP (prefix maxima with leftmost argmax)
# --------------------------------------------------------------------------

def _forward_rows_loop(W, row_off, col0, r_start, r_end, D, ptr, M):
    ncols = D.shape[1]
    for r in range(r_start, r_end + 1):
        wr = row_off + r
        if r == 0:
            base = W[wr, col0]
            for j in range(ncols):
                D[0, j] = W[wr, col0 + j] - base
                ptr[0, j] = 0
                M[0, j] = -base
            continue
        best = -np.inf
        arg = 0
        for j in range(ncols):
            w = W[wr, col0 + j]
            h = D[r - 1, j] - w
            if h > best:
                best = h
                arg = j
            D[r, j] = best + w
            ptr[r, j] = arg
            M[r, j] = best


def _update_rows_loop(W, row_off, col0, r_start, r_end, c_start, D, ptr, M):
    """Recompute rows ``r_start..`` from column ``c_start`` on, in place.

    Columns left of the first changed column of row ``r - 1`` cannot change
    in row ``r``, and once a row comes out unchanged so does everything
    above it.  Returns the last row that was recomputed.
    """
    ncols = D.shape[1]
    c = c_start
    last = r_start - 1
    for r in range(r_start, r_end + 1):
        if c >= ncols:
            break
        last = r
        wr = row_off + r
        first = ncols
        if r == 0:
            base = W[wr, col0]
            for j in range(c, ncols):
                v = W[wr, col0 + j] - base
                if first == ncols and v != D[0, j]:
                    first = j
                D[0, j] = v
                M[0, j] = -base
        else:
            if c > 0:
                best = M[r, c - 1]
                arg = ptr[r, c - 1]
            else:
                best = -np.inf
                arg = 0
            for j in range(c, ncols):
                w = W[wr, col0 + j]
                h = D[r - 1, j] - w
                if h > best:
                    best = h
                    arg = j
                v = best + w
                if first == ncols and v != D[r, j]:
                    first = j
                D[r, j] = v
                ptr[r, j] = arg
                M[r, j] = best
        c = first
    return last


def _row_numpy(W, row_off, col0, r, c, D, ptr, M):
    ncols = D.shape[1]
    wrow = W[row_off + r, col0 + c:col0 + ncols]
    if r == 0:
        base = W[row_off, col0]
        D[0, c:] = wrow - base
        ptr[0, c:] = 0
        M[0, c:] = -base
        return
    h = D[r - 1, c:] - wrow
    if c > 0:
        best0, arg0 = M[r, c - 1], ptr[r, c - 1]
    else:
        best0, arg0 = -np.inf, 0
    run = np.maximum.accumulate(np.concatenate(([best0], h)))
    fresh = h > run[:-1]
    idx = np.arange(c, ncols, dtype=ptr.dtype)
    ptr[r, c:] = np.maximum.accumulate(np.concatenate(([arg0], np.where(fresh, idx, -1))))[1:]
    M[r, c:] = run[1:]
    D[r, c:] = run[1:] + wrow


def _forward_rows_numpy(W, row_off, col0, r_start, r_end, D, ptr, M):
    for r in range(r_start, r_end + 1):
        _row_numpy(W, row_off, col0, r, 0, D, ptr, M)


def _update_rows_numpy(W, row_off, col0, r_start, r_end, c_start, D, ptr, M):
    ncols = D.shape[1]
    c = c_start
    last = r_start - 1
    for r in range(r_start, r_end + 1):
        if c >= ncols:
            break
        last = r
        old = D[r, c:].copy()
        _row_numpy(W, row_off, col0, r, c, D, ptr, M)
        diff = np.flatnonzero(D[r, c:] != old)
        c = c + int(diff[0]) if diff.size else ncols
    return last


def _backtrack_loop(ptr, r_end, j_end, out):
    out[r_end + 1] = j_end
    for r in range(r_end, 0, -1):
        out[r] = ptr[r, out[r + 1]]
    out[0] = 0


def _backtrack_numpy(ptr, r_end, j_end, out):
    out[r_end + 1] = j_end
    j = j_end
    for r in range(r_end, 0, -1):
        j = ptr[r, j]
        out[r] = j
    out[0] = 0


# --------------------------------------------------------------------------
# two disjoint paths (k = 2); endpoints shared, interiors disjoint
# --------------------------------------------------------------------------

def _pair_dp_loop(Wwin):
    nrows, N = Wwin.shape
    F = np.full((N, N), -np.inf)
    w0 = Wwin[0]
    for b in range(N):
        F[0, b] = w0[b] - w0[0]
    P = np.empty((N, N))
    G = np.empty((N, N))
    for r in range(1, nrows):
        w = Wwin[r]
        # P[a, b'] = max_{a' <= a} F[a', b'] - w[a'] - w[b']
        for bp in range(N):
            run = -np.inf
            for a in range(N):
                v = F[a, bp]
                if v > -np.inf:
                    v = v - w[a] - w[bp]
                if v > run:
                    run = v
                P[a, bp] = run
        for a in range(N):
            run = -np.inf
            if a == 0 or a == N - 1:
                v = P[a, a]
                if v > run:
                    run = v
            for b in range(N):
                if b > a:
                    v = P[a, b]
                    if v > run:
                        run = v
                if b >= a and run > -np.inf:
                    G[a, b] = run + w[a] + w[b]
                else:
                    G[a, b] = -np.inf
        for a in range(N):
            for b in range(N):
                F[a, b] = G[a, b]
    return F[N - 1, N - 1]


def _pair_dp_numpy(Wwin):
    nrows, N = Wwin.shape
    F = np.full((N, N), -np.inf)
    F[0, :] = Wwin[0] - Wwin[0, 0]
    a_idx = np.arange(N)[:, None]
    b_idx = np.arange(N)[None, :]
    allowed = b_idx > a_idx
    allowed[0, 0] = True
    allowed[N - 1, N - 1] = True
    upper = b_idx >= a_idx
    for r in range(1, nrows):
        w = Wwin[r]
        with np.errstate(invalid="ignore"):
            H = F - w[:, None] - w[None, :]
        H[~np.isfinite(F)] = -np.inf
        P = np.maximum.accumulate(H, axis=0)
        M = np.maximum.accumulate(np.where(allowed, P, -np.inf), axis=1)
        with np.errstate(invalid="ignore"):
            Fn = M + w[:, None] + w[None, :]
        Fn[~upper | ~np.isfinite(M)] = -np.inf
        F = Fn
    return F[N - 1, N - 1]


if HAVE_NUMBA:
    _forward_rows_nb = njit(cache=True)(_forward_rows_loop)
    _update_rows_nb = njit(cache=True)(_update_rows_loop)
    _backtrack_nb = njit(cache=True)(_backtrack_loop)
    _pair_dp_nb = njit(cache=True)(_pair_dp_loop)
else:  # pragma: no cover
    _forward_rows_nb = _update_rows_nb = _backtrack_nb = _pair_dp_nb = None

if BACKEND == "numba":
    forward_rows = _forward_rows_nb
    update_rows = _update_rows_nb
    backtrack = _backtrack_nb
    pair_dp = _pair_dp_nb
else:
    forward_rows = _forward_rows_numpy
    update_rows = _update_rows_numpy
    backtrack = _backtrack_numpy
    pair_dp = _pair_dp_numpy

IMPLEMENTATIONS = {
    "numpy": {"forward_rows": _forward_rows_numpy, "update_rows": _update_rows_numpy,
              "backtrack": _backtrack_numpy, "pair_dp": _pair_dp_numpy},
}
if HAVE_NUMBA:
    IMPLEMENTATIONS["numba"] = {"forward_rows": _forward_rows_nb, "update_rows": _update_rows_nb,
                                "backtrack": _backtrack_nb, "pair_dp": _pair_dp_nb}
