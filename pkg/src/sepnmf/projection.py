"""Euclidean projection of localizing-matrix columns onto Phi0.

Phi0 = {C >= 0, diag(C) <= 1, C_ij <= C_jj}. It separates by column: column
``j`` must lie in ``{x : 0 <= x_i <= x_j, x_j <= 1}`` with ``j`` as the pivot.
"""

import numpy as np
from numba import njit

from .matrix import LocalizingMatrix


@njit(cache=True, nogil=True)
def _clamp01(v):
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


@njit(cache=True, nogil=True)
def _squish(z, pivot, out):
    """Project ``z`` onto {0 <= x_i <= x_pivot <= 1}; write the result to ``out``.

    Returns the size of the pooled group (pivot plus the largest entries
    that share its value).
    """
    f = z.shape[0]
    rest = np.empty(f - 1, dtype=np.int64)
    keys = np.empty(f - 1, dtype=np.float64)
    m = 0
    for i in range(f):
        if i != pivot:
            rest[m] = i
            keys[m] = -z[i]
            m += 1
    # mergesort is stable, so ties keep ascending original index
    order = np.argsort(keys, kind="mergesort")

    mu = z[pivot]
    kc = f
    for k in range(2, f + 1):
        zk = z[rest[order[k - 2]]]
        if zk <= _clamp01(mu):
            kc = k - 1
            break
        mu = ((k - 1) / k) * mu + zk / k
    level = _clamp01(mu)

    out[pivot] = level
    for s in range(f - 1):
        i = rest[order[s]]
        if s < kc - 1:
            out[i] = level
        else:
            v = z[i]
            out[i] = v if v > 0.0 else 0.0
    return kc


@njit(cache=True, nogil=True)
def _project_columns(C, j0, j1):
    f = C.shape[0]
    col = np.empty(f)
    out = np.empty(f)
    for j in range(j0, j1):
        for i in range(f):
            col[i] = C[i, j]
        _squish(col, j, out)
        for i in range(f):
            C[i, j] = out[i]


@njit(cache=True, nogil=True)
def _clip_rows(C, r0, r1):
    f = C.shape[1]
    for i in range(r0, r1):
        for j in range(f):
            if C[i, j] < 0.0:
                C[i, j] = 0.0
        if C[i, i] > 1.0:
            C[i, i] = 1.0


def column_squish(z, pivot=0):
    """Euclidean projection of ``z`` onto ``{x : 0 <= x_i <= x_pivot <= 1}``.

    Non-pivot entries are sorted in decreasing order (ties by index) and
    averaged into the pivot while they exceed the clamped running mean.
    The pooled group takes that clamped mean and the remaining entries are
    clipped at zero.
    """
    z = np.ascontiguousarray(z, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("column_squish expects a non-empty vector")
    if not 0 <= pivot < z.size:
        raise IndexError(f"pivot {pivot} out of range for length {z.size}")
    out = np.empty_like(z)
    _squish(z, pivot, out)
    return out


def squish_group_size(z, pivot=0):
    """Size ``k_c`` of the pooled group chosen by :func:`column_squish`."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    out = np.empty_like(z)
    return int(_squish(z, pivot, out))


def project_phi0_inplace(values, columns=None):
    """Project the columns ``[j0, j1)`` of a dense array onto Phi0 in place."""
    j0, j1 = columns if columns is not None else (0, values.shape[1])
    _project_columns(values, j0, j1)


def clip_inplace(values, rows=None):
    r0, r1 = rows if rows is not None else (0, values.shape[0])
    _clip_rows(values, r0, r1)


def project_phi0(C):
    """Return the projection of ``C`` onto Phi0 (column by column)."""
    out = C.copy()
    _project_columns(out.values, 0, out.order)
    return out


def clip_project(C):
    """Zero the negatives and cap the diagonal at one. Dominance is not enforced."""
    out = C.copy()
    _clip_rows(out.values, 0, out.order)
    return out


__all__ = [
    "LocalizingMatrix",
    "column_squish",
    "squish_group_size",
    "project_phi0",
    "project_phi0_inplace",
    "clip_project",
    "clip_inplace",
]
