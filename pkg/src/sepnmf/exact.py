"""Exact LP path: solve the Phi_tau(X) LP and read hott rows off diag(C).

Variables are the entries of C (row-major, ``C_ij`` at ``i*f + j``) followed,
when ``tau > 0``, by residual magnitudes ``e_ij`` at ``f*f + i*n + j``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import lp as lpb
from .cleaning import CleanConfig, fit_f
from .errors import DegenerateSolutionError, InvalidInputError, LPFailure, ScaleLimitError
from .hottopixx import default_cost, top_diagonal
from .matrix import (
    ErrorReport,
    FactorizationResult,
    LocalizingMatrix,
    as_sparse,
    inf_one_norm,
    residual,
    rmse,
)

MAX_LP_VARS = 50_000
MAX_LP_ROWS = 50_000
ONE_TOL = 1e-6
MODES = ("exact-ones", "top-r")


@dataclass
class PhiLpConfig:
    tau: float
    rank: int
    cost: np.ndarray | None = None
    mode: str | None = None     # None: exact-ones when tau == 0, top-r otherwise
    seed: int = 0

    def __post_init__(self):
        if not self.tau >= 0:
            raise InvalidInputError("tau must be >= 0")
        if self.rank < 1:
            raise InvalidInputError("rank must be >= 1")
        if self.mode is None:
            self.mode = "exact-ones" if self.tau == 0 else "top-r"
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}")
        if self.cost is not None:
            self.cost = np.asarray(self.cost, dtype=np.float64)
            if np.unique(self.cost).size != self.cost.size:
                raise InvalidInputError("cost entries must be pairwise distinct")

    def cost_for(self, f):
        if self.cost is None:
            return default_cost(f, self.seed, scale=1.0)
        if self.cost.shape != (f,):
            raise InvalidInputError(f"cost has length {self.cost.size}, expected {f}")
        return self.cost


def phi_lp_size(f, n, tau):
    """(variables, constraint rows) of the Phi LP without building it."""
    dominance = f * (f - 1)
    if tau == 0:
        return f * f, f * n + dominance + 1
    return f * f + f * n, 2 * f * n + f + dominance + 1


def build_phi_lp(X, cfg: PhiLpConfig):
    X = as_sparse(X)
    f, n = X.shape
    nv, nr = phi_lp_size(f, n, cfg.tau)
    if nv > MAX_LP_VARS or nr > MAX_LP_ROWS:
        raise ScaleLimitError(
            f"the Phi LP for a {f} x {n} matrix has {nv} variables and {nr} rows, "
            f"beyond the {MAX_LP_VARS} / {MAX_LP_ROWS} ceiling; use the hottopixx "
            "solver for problems of this size"
        )
    b = lpb.LPBuilder(nv)
    coo = X.csc.tocoo()
    k, j, v = coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data
    i = np.arange(f)
    # (C X)_ij = sum_k C_ik X_kj: one coefficient per (i, nonzero X_kj)
    rows = (i[:, None] * n + j[None, :]).ravel()
    cols = (i[:, None] * f + k[None, :]).ravel()
    vals = np.tile(v, f)
    rhs = X.to_dense().ravel()
    if cfg.tau == 0:
        b.add_rows(rows, cols, vals, lpb.EQ, rhs)
    else:
        e = f * f + np.arange(f * n)
        ones = np.ones(f * n)
        # (CX - X)_ij - e_ij <= 0 and -(CX - X)_ij - e_ij <= 0
        b.add_rows(np.concatenate([rows, np.arange(f * n)]), np.concatenate([cols, e]),
                   np.concatenate([vals, -ones]), lpb.LE, rhs)
        b.add_rows(np.concatenate([rows, np.arange(f * n)]), np.concatenate([cols, e]),
                   np.concatenate([-vals, -ones]), lpb.LE, -rhs)
        b.add_rows(np.repeat(i, n), e, ones, lpb.LE, np.full(f, float(cfg.tau)))
    # C_ij <= C_jj for i != j
    ii, jj = np.nonzero(~np.eye(f, dtype=bool))
    m = ii.size
    b.add_rows(np.concatenate([np.arange(m), np.arange(m)]),
               np.concatenate([ii * f + jj, jj * f + jj]),
               np.concatenate([np.ones(m), -np.ones(m)]), lpb.LE, np.zeros(m))
    b.add_row(i * f + i, 1.0, lpb.EQ, float(cfg.rank))

    c = np.zeros(nv)
    c[i * f + i] = cfg.cost_for(f)
    upper = np.full(nv, np.inf)
    upper[i * f + i] = 1.0
    return b.build(c, upper, name="PHI")


def localizing_from_solution(x, f):
    return LocalizingMatrix(np.ascontiguousarray(x[: f * f].reshape(f, f)))


def extract_hott(C, cfg: PhiLpConfig):
    diag = C.diag() if isinstance(C, LocalizingMatrix) else np.asarray(C, dtype=np.float64)
    cost = cfg.cost_for(diag.size)
    if cfg.mode == "top-r":
        return top_diagonal(diag, cost, cfg.rank)
    hott = np.flatnonzero(diag >= 1 - ONE_TOL)
    if hott.size != cfg.rank:
        raise DegenerateSolutionError(
            f"{hott.size} diagonal entries equal one but rank is {cfg.rank}; "
            "use the top-r selection mode"
        )
    return hott


def solve_phi(X, cfg: PhiLpConfig, method="auto"):
    """Build and solve the Phi LP; returns ``(lp, solution)`` without raising on status."""
    lp = build_phi_lp(X, cfg)
    return lp, lpb.solve(lp, method=method)


def factor_exact(X, cfg: PhiLpConfig, clean=None, method="auto"):
    X = as_sparse(X)
    f = X.n_rows
    if cfg.rank > f:
        raise InvalidInputError(f"rank {cfg.rank} exceeds the {f} rows of X")
    t0 = time.perf_counter()
    _, sol = solve_phi(X, cfg, method)
    if not sol.ok:
        raise LPFailure(f"Phi LP ended with status {sol.status}", sol.status)
    C = localizing_from_solution(sol.x, f)
    hott = extract_hott(C, cfg)
    W = X.rows(hott)
    F = fit_f(X, W, clean or CleanConfig())
    elapsed = time.perf_counter() - t0
    report = ErrorReport(inf_one_norm(residual(X, F, W)), rmse(X, F, W), None, elapsed)
    diag = {"objective": sol.objective, "iterations": sol.iterations, "lp_method": sol.method}
    return FactorizationResult(hott, F, W, report, "lp", "ok", [diag], C)
