"""Float/int64 inner loops with a numba path and a pure-numpy path.

The numba path is used when numba imports cleanly and the environment
variable ``COHESIVE_NUMBA`` is not set to ``0``. Both paths are always
importable (``numpy_*`` / ``numba_*``) so tests and the benchmark can compare
them directly.

Exact (rational) arithmetic never reaches this module except through the
int64 subset-sum kernel, which callers only use after scaling all values to
integers that fit comfortably in 64 bits.
"""
from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("COHESIVE_NUMBA", "1").strip().lower()

try:
    if _FLAG in ("0", "false", "no", "off"):
        raise ImportError("disabled by COHESIVE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

NUMBA_ENABLED = HAVE_NUMBA


# ---------------------------------------------------------------------------
# band risk measure, many variables at once
# ---------------------------------------------------------------------------

def numpy_band_rho_batch(p, L, H, xis):
    """``max E_phi[-xi]`` over ``{L <= phi <= H, E_P phi = 1}`` for each row of ``xis``."""
    xis = np.atleast_2d(xis)
    ell = p @ L
    w = p * (H - L)
    order = np.argsort(xis, axis=1, kind="stable")
    xs = np.take_along_axis(xis, order, axis=1)
    ws = w[order]
    budget = 1.0 - ell
    cum_before = np.cumsum(ws, axis=1) - ws
    take = np.clip(budget - cum_before, 0.0, ws)
    extra = -(take * xs).sum(axis=1)
    return -(xis @ (p * L)) + extra


def numpy_subset_sums(w):
    n = len(w)
    bits = ((np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1).astype(w.dtype)
    return bits @ w, bits.astype(bool)


def numpy_band_extreme_pairs(w, target, tol):
    """Mark ``(mask, j)`` pairs where atoms in ``mask`` sit at the upper bound and
    atom ``j`` takes the leftover budget ``target - sum(mask)`` in ``[0, w_j]``."""
    sums, bits = numpy_subset_sums(w)
    rest = target - sums
    ok = (rest[:, None] >= -tol) & (rest[:, None] <= w[None, :] + tol) & ~bits
    return sums, ok


def numpy_minmax_affine_grid(C, d, widths, n_grid, levels, span=4):
    """Approximately minimise ``max_j C_j.u + d_j`` over the box ``[0, widths]``.

    Evaluates a regular grid, then repeatedly zooms onto a box of ``span``
    cells either side of the best point so far. Returns ``(value, point)``.
    """
    k = len(widths)
    if k == 0:
        return (d.max() if len(d) else -np.inf), np.zeros(0)
    lo = np.zeros(k)
    hi = widths.astype(float).copy()
    best_val = np.inf
    best_pt = lo.copy()
    axes_idx = np.indices((n_grid + 1,) * k).reshape(k, -1).T / n_grid
    for _ in range(levels):
        pts = lo + axes_idx * (hi - lo)
        vals = (pts @ C.T + d).max(axis=1)
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val = vals[j]
            best_pt = pts[j].copy()
        cell = (hi - lo) / n_grid
        lo = np.maximum(best_pt - span * cell, 0.0)
        hi = np.minimum(best_pt + span * cell, widths)
    return best_val, best_pt


# ---------------------------------------------------------------------------
# numba versions
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def numba_band_rho_batch(p, L, H, xis):
        m, n = xis.shape
        out = np.empty(m)
        ell = 0.0
        for j in range(n):
            ell += p[j] * L[j]
        w = p * (H - L)
        for r in range(m):
            xi = xis[r]
            order = np.argsort(xi, kind="mergesort")
            budget = 1.0 - ell
            acc = 0.0
            for j in range(n):
                acc -= p[j] * L[j] * xi[j]
            for t in range(n):
                j = order[t]
                if budget <= 0.0:
                    break
                take = w[j] if w[j] < budget else budget
                acc -= take * xi[j]
                budget -= take
            out[r] = acc
        return out

    @njit(cache=True)
    def numba_subset_sums(w):
        n = len(w)
        sums = np.zeros(1 << n, dtype=w.dtype)
        for mask in range(1, 1 << n):
            low = mask & -mask
            j = 0
            while (low >> j) != 1:
                j += 1
            sums[mask] = sums[mask ^ low] + w[j]
        return sums

    @njit(cache=True)
    def _numba_pairs(w, target, tol):
        n = len(w)
        sums = numba_subset_sums(w)
        ok = np.zeros((1 << n, n), dtype=np.bool_)
        for mask in range(1 << n):
            rest = target - sums[mask]
            if rest < -tol:
                continue
            for j in range(n):
                if (mask >> j) & 1 == 0 and rest <= w[j] + tol:
                    ok[mask, j] = True
        return sums, ok

    def numba_band_extreme_pairs(w, target, tol):
        return _numba_pairs(w, w.dtype.type(target), w.dtype.type(tol))

    @njit(cache=True)
    def numba_minmax_affine_grid(C, d, widths, n_grid, levels, span=4):
        k = len(widths)
        nc = len(d)
        if k == 0:
            v = -np.inf
            for j in range(nc):
                if d[j] > v:
                    v = d[j]
            return v, np.zeros(0)
        lo = np.zeros(k)
        hi = widths.astype(np.float64).copy()
        best_val = np.inf
        best_pt = lo.copy()
        npts = (n_grid + 1) ** k
        pt = np.empty(k)
        for _ in range(levels):
            lvl_val = np.inf
            lvl_pt = lo.copy()
            for idx in range(npts):
                rem = idx
                for a in range(k - 1, -1, -1):
                    pt[a] = lo[a] + (rem % (n_grid + 1)) * (hi[a] - lo[a]) / n_grid
                    rem //= n_grid + 1
                v = -np.inf
                for j in range(nc):
                    s = d[j]
                    for a in range(k):
                        s += C[j, a] * pt[a]
                    if s > v:
                        v = s
                if v < lvl_val:
                    lvl_val = v
                    lvl_pt[:] = pt
            if lvl_val < best_val:
                best_val = lvl_val
                best_pt[:] = lvl_pt
            for a in range(k):
                cell = (hi[a] - lo[a]) / n_grid
                lo[a] = max(best_pt[a] - span * cell, 0.0)
                hi[a] = min(best_pt[a] + span * cell, widths[a])
        return best_val, best_pt

else:  # pragma: no cover - exercised only without numba
    numba_band_rho_batch = None
    numba_subset_sums = None
    numba_band_extreme_pairs = None
    numba_minmax_affine_grid = None


if NUMBA_ENABLED:
    band_rho_batch = numba_band_rho_batch
    band_extreme_pairs = numba_band_extreme_pairs
    minmax_affine_grid = numba_minmax_affine_grid
else:
    band_rho_batch = numpy_band_rho_batch
    band_extreme_pairs = numpy_band_extreme_pairs
    minmax_affine_grid = numpy_minmax_affine_grid


def backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
