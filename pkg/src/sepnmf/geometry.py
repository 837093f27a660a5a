"""l1 simplex geometry: sampling, hull distances, and the margins alpha and d0."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import lp as lpb
from .errors import InvalidInputError, LPFailure
from .matrix import SparseMatrix

DUPLICATE_TOL = 1e-12
FORMS = ("auto", "primal", "dual")


@dataclass
class HullDistanceResult:
    distance: float
    weights: np.ndarray


def sample_simplex(dim, rng):
    """Uniform draw from the unit simplex in ``dim`` coordinates.

    The gaps between sorted uniforms on [0, 1] are flat-Dirichlet distributed.
    """
    if dim < 1:
        raise InvalidInputError("simplex dimension must be >= 1")
    cuts = np.sort(rng.uniform(size=dim - 1))
    return np.diff(np.concatenate(([0.0], cuts, [1.0])))


def _dense(A):
    if isinstance(A, SparseMatrix):
        return A.to_dense()
    if sp.issparse(A):
        return A.toarray()
    return np.asarray(A, dtype=np.float64)


def hull_primal_lp(v, U):
    """``min sum(t+ + t-)`` s.t. ``theta @ U + t+ - t- = v``, ``sum(theta) = 1``."""
    m, n = U.shape
    b = lpb.LPBuilder(m + 2 * n)
    rows = np.concatenate([np.repeat(np.arange(n), m), np.arange(n), np.arange(n), np.full(m, n)])
    cols = np.concatenate([np.tile(np.arange(m), n), m + np.arange(n),
                           m + n + np.arange(n), np.arange(m)])
    vals = np.concatenate([U.T.ravel(), np.ones(n), -np.ones(n), np.ones(m)])
    keep = vals != 0
    b.add_rows(rows[keep], cols[keep], vals[keep], lpb.EQ, np.concatenate([v, [1.0]]))
    return b.build(np.concatenate([np.zeros(m), np.ones(2 * n)]), name="HULLPRIMAL")


def hull_dual_lp(v, U):
    """LP dual of the hull distance, with one row per hull point.

    ``max_{|y| <= 1, s} y @ v - s`` s.t. ``U @ y <= s``. With ``y = z - 1``,
    ``z in [0, 2]`` and ``s = s+ - s-`` this is a bounded LP in standard form;
    the row multipliers are the convex weights theta.
    """
    m, n = U.shape
    A = sp.hstack([sp.csr_matrix(U), -np.ones((m, 1)), np.ones((m, 1))]).tocsr()
    c = np.concatenate([-v, [1.0, -1.0]])
    upper = np.concatenate([np.full(n, 2.0), [np.inf, np.inf]])
    return lpb.LinearProgram(c, A, U.sum(axis=1), np.full(m, lpb.LE), upper, name="HULLDUAL")


def l1_dist_to_hull(v, hull_rows, form="auto", method="auto"):
    """l1 distance from ``v`` to the convex hull of ``hull_rows``.

    ``form="primal"`` solves the linearized l1 fit directly (one row per
    coordinate); ``"dual"`` solves its LP dual (one row per hull point) and
    reads theta from the multipliers. ``"auto"`` picks the smaller one.
    """
    if form not in FORMS:
        raise InvalidInputError(f"form must be one of {FORMS}")
    v = np.asarray(v, dtype=np.float64).ravel()
    U = np.atleast_2d(_dense(hull_rows))
    if U.shape[0] == 0:
        raise InvalidInputError("hull set is empty")
    if U.shape[1] != v.size:
        raise InvalidInputError(f"hull rows have length {U.shape[1]}, point has {v.size}")
    m, n = U.shape
    if m == 1:
        return HullDistanceResult(float(np.abs(v - U[0]).sum()), np.ones(1))
    if form == "auto":
        form = "dual" if n > m else "primal"
    if form == "primal":
        sol = lpb.solve(hull_primal_lp(v, U), method=method)
        if not sol.ok:
            raise LPFailure(f"hull-distance LP ended with status {sol.status}", sol.status)
        theta = sol.x[:m]
    else:
        sol = lpb.solve(hull_dual_lp(v, U), method=method)
        if not sol.ok or sol.duals is None:
            raise LPFailure(f"hull-distance dual LP ended with status {sol.status}", sol.status)
        theta = -sol.duals
    theta = np.maximum(theta, 0.0)
    total = theta.sum()
    if total <= 0:
        raise LPFailure("hull-distance LP returned zero weights", "optimal")
    theta = theta / total
    # report the distance of the returned witness so (distance, weights) agree
    dist = float(np.abs(v - theta @ U).sum())
    return HullDistanceResult(dist, theta)


def robust_alpha(W, method="auto"):
    """Smallest l1 distance from a row of W to the hull of the other rows."""
    W = _dense(W)
    r = W.shape[0]
    if r < 2:
        raise InvalidInputError("robust_alpha needs at least two rows")
    best = np.inf
    for i in range(r):
        others = np.delete(W, i, axis=0)
        best = min(best, l1_dist_to_hull(W[i], others, method=method).distance)
    return float(best)


def margin_d0(Y, hott):
    """Smallest l1 distance between a non-hott row and a hott row.

    Rows equal (within 1e-12 in l1) to some hott row count as duplicate hott
    rows and are skipped. Returns ``inf`` when no non-hott row remains.
    """
    Y = _dense(Y)
    hott = np.unique(np.asarray(hott, dtype=np.int64))
    if hott.size == 0:
        raise InvalidInputError("hott set is empty")
    rest = np.setdiff1d(np.arange(Y.shape[0]), hott)
    if rest.size == 0:
        return float("inf")
    D = np.empty((rest.size, hott.size))
    for c, i in enumerate(hott):
        D[:, c] = np.abs(Y[rest] - Y[i]).sum(axis=1)
    D = D[D.min(axis=1) > DUPLICATE_TOL]
    return float(D.min()) if D.size else float("inf")
