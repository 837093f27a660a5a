"""Cleaning step: F = argmin_{Z >= 0} ||X - Z W||_(inf,1).

The (inf,1) norm is a max over rows and each row of Z only affects its own
row of the residual, so minimizing each row's l1 error independently also
minimizes the max.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit

from . import lp as lpb
from .errors import InvalidInputError, LPFailure
from .matrix import SparseMatrix

METHODS = ("exact-lp", "sgd")


@dataclass
class CleanConfig:
    method: str = "exact-lp"
    epochs: int = 2
    step: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"cleaning method must be one of {METHODS}")
        if self.method == "sgd" and self.epochs < 1:
            raise InvalidInputError("sgd cleaning needs at least one epoch")
        if self.step <= 0:
            raise InvalidInputError("cleaning step must be positive")


def _dense(X):
    return X.to_dense() if isinstance(X, SparseMatrix) else np.asarray(X, dtype=np.float64)


def row_l1_lp(x, W):
    """LP for ``min_{z >= 0} ||x - z @ W||_1`` with variables (z, t+, t-)."""
    r, n = W.shape
    b = lpb.LPBuilder(r + 2 * n)
    ii = np.repeat(np.arange(n), r)
    jj = np.tile(np.arange(r), n)
    vals = W.T.ravel()
    keep = vals != 0
    rows = np.concatenate([ii[keep], np.arange(n), np.arange(n)])
    cols = np.concatenate([jj[keep], r + np.arange(n), r + n + np.arange(n)])
    data = np.concatenate([vals[keep], np.ones(n), -np.ones(n)])
    b.add_rows(rows, cols, data, lpb.EQ, x)
    c = np.concatenate([np.zeros(r), np.ones(2 * n)])
    return b.build(c, name="CLEANROW")


def row_l1_dual_lp(x, W):
    """LP dual of :func:`row_l1_lp`, with one row per row of W.

    ``max_{|y| <= 1} x @ y`` s.t. ``W @ y <= 0``; with ``y = u - 1``,
    ``u in [0, 2]``, the row multipliers are ``-z``.
    """
    r, n = W.shape
    return lpb.LinearProgram(-x, sp.csr_matrix(W), W.sum(axis=1), np.full(r, lpb.LE),
                             np.full(n, 2.0), name="CLEANDUAL")


def fit_row(x, W, form="auto", method="auto"):
    """Nonnegative weights ``z`` minimizing ``||x - z @ W||_1``.

    Returns ``(solution, z)`` with ``z = None`` when the LP did not finish.
    """
    r, n = W.shape
    if form == "auto":
        form = "dual" if n > r else "primal"
    if form == "primal":
        sol = lpb.solve(row_l1_lp(x, W), method=method)
        return sol, (sol.x[:r] if sol.ok else None)
    sol = lpb.solve(row_l1_dual_lp(x, W), method=method)
    if not sol.ok or sol.duals is None:
        return sol, None
    return sol, np.maximum(-sol.duals, 0.0)


def fit_f_exact(X, W, method="auto", form="auto"):
    """Row-by-row exact solution of the cleaning LP; returns F (f x r).

    ``form`` picks the LP: ``"primal"`` has one constraint per column of X,
    ``"dual"`` one per row of W (far smaller when r << n).
    """
    Xd = _dense(X)
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] != Xd.shape[1]:
        raise InvalidInputError(f"W shape {W.shape} does not match X {Xd.shape}")
    f, r = Xd.shape[0], W.shape[0]
    F = np.zeros((f, r))
    for i in range(f):
        sol, z = fit_row(Xd[i], W, form, method)
        if z is None:
            raise LPFailure(f"cleaning LP for row {i} ended with status {sol.status}", sol.status)
        F[i] = z
    return F


def row_errors(X, F, W):
    """Per-row l1 residual ``||X_i - F_i W||_1``."""
    return np.abs(_dense(X) - np.asarray(F) @ np.asarray(W)).sum(axis=1)


@njit(cache=True, nogil=True)
def _clean_sweep(F, X, W, cols, step):
    f, r = F.shape
    for t in range(cols.shape[0]):
        k = cols[t]
        for i in range(f):
            acc = 0.0
            for j in range(r):
                acc += F[i, j] * W[j, k]
            res = X[i, k] - acc
            if res == 0.0:
                continue
            s = step if res > 0.0 else -step
            for j in range(r):
                v = F[i, j] + s * W[j, k]
                F[i, j] = v if v > 0.0 else 0.0


def fit_f_sgd(X, W, cfg=None, F0=None):
    """Projected incremental subgradient on the per-row l1 losses.

    Columns are sampled uniformly with replacement, ``n`` per epoch, and F is
    clipped at zero after every step. ``F0`` warm-starts the iteration.
    """
    cfg = cfg or CleanConfig(method="sgd")
    Xd = np.ascontiguousarray(_dense(X))
    W = np.ascontiguousarray(W, dtype=np.float64)
    f, n = Xd.shape
    r = W.shape[0]
    if W.shape[1] != n:
        raise InvalidInputError(f"W shape {W.shape} does not match X {Xd.shape}")
    F = np.zeros((f, r)) if F0 is None else np.array(F0, dtype=np.float64)
    F = np.maximum(F, 0.0)
    rng = np.random.default_rng([cfg.seed, 0xF17])
    for _ in range(cfg.epochs):
        cols = rng.integers(0, n, size=n)
        _clean_sweep(F, Xd, W, cols, cfg.step)
    return F


def fit_f(X, W, cfg=None, F0=None):
    cfg = cfg or CleanConfig()
    if cfg.method == "exact-lp":
        return fit_f_exact(X, W)
    return fit_f_sgd(X, W, cfg, F0)
