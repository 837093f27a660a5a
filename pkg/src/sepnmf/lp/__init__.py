"""LP backend: model container, revised simplex, and a HiGHS route for size."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .model import EQ, LE, LinearProgram, LPBuilder, LpSolution
from .mps import read_mps, write_mps
from .simplex import dual_objective, revised_simplex

# beyond these sizes the dense basis inverse (rows) or the long runs of bound
# flips (columns) get too slow; hand off to HiGHS
SIMPLEX_MAX_ROWS = 600
SIMPLEX_MAX_VARS = 200
METHODS = ("auto", "simplex", "highs")

_HIGHS_STATUS = {0: "optimal", 1: "iteration-limit", 2: "infeasible", 3: "unbounded"}


def _solve_highs(lp, max_iters):
    le = lp.senses == LE
    eq = ~le
    A = lp.A
    kwargs = {}
    if le.any():
        kwargs.update(A_ub=A[le], b_ub=lp.b[le])
    if eq.any():
        kwargs.update(A_eq=A[eq], b_eq=lp.b[eq])
    bounds = [(0.0, None if np.isinf(u) else float(u)) for u in lp.upper]
    res = linprog(lp.c, bounds=bounds, method="highs",
                  options={"maxiter": int(max_iters), "presolve": True}, **kwargs)
    # status 4 (numerical trouble) has no exact counterpart; report it as capped
    status = _HIGHS_STATUS.get(res.status, "iteration-limit")
    if res.x is None:
        x = np.zeros(lp.n_vars)
    else:
        x = np.clip(res.x, 0.0, lp.upper)
    duals = None
    if res.status == 0:
        duals = np.zeros(lp.n_rows)
        if le.any():
            duals[le] = res.ineqlin.marginals
        if eq.any():
            duals[eq] = res.eqlin.marginals
    return LpSolution(status, x, float(lp.c @ x), int(getattr(res, "nit", 0) or 0), duals, "highs")


def solve(lp: LinearProgram, max_iters=200_000, method="auto"):
    """Solve ``lp``.

    ``method="simplex"`` runs the in-house revised simplex, ``"highs"`` the
    HiGHS solver with its own choice of algorithm, and ``"auto"`` picks the in-house solver up to
    ``SIMPLEX_MAX_ROWS`` rows and ``SIMPLEX_MAX_VARS`` variables. Status
    problems are reported in the returned solution; nothing is raised for
    infeasible or unbounded LPs.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if method == "auto":
        small = lp.n_rows <= SIMPLEX_MAX_ROWS and lp.n_vars <= SIMPLEX_MAX_VARS
        method = "simplex" if small else "highs"
    if method == "simplex":
        return revised_simplex(lp, max_iters)
    return _solve_highs(lp, max_iters)


__all__ = [
    "EQ",
    "LE",
    "LinearProgram",
    "LPBuilder",
    "LpSolution",
    "solve",
    "revised_simplex",
    "dual_objective",
    "write_mps",
    "read_mps",
    "SIMPLEX_MAX_ROWS",
    "SIMPLEX_MAX_VARS",
]
