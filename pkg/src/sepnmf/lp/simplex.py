"""Bounded-variable revised simplex with an explicit basis inverse.

Two phases: phase 1 minimizes the sum of artificials, leftover artificials
are pivoted out (or pinned at zero when their row is redundant), and phase 2
minimizes the true objective. Pricing is Dantzig's rule; after a streak of
degenerate pivots it switches to Bland's rule until progress resumes.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .model import LE, LinearProgram, LpSolution

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
DEGENERATE_STREAK = 50
REFACTOR_EVERY = 64

_LOWER, _UPPER, _BASIC = 0, 1, 2


class _Tableau:
    def __init__(self, lp):
        m, nv = lp.A.shape
        A = sp.csc_matrix(lp.A)
        b = lp.b.copy()
        sign = np.where(b < 0, -1.0, 1.0)
        A = sp.diags(sign) @ A
        b = b * sign
        le = np.flatnonzero(lp.senses == LE)
        slack = sp.csc_matrix((sign[le], (le, np.arange(le.size))), shape=(m, le.size))
        # rows whose slack enters with +1 start from that slack; others need an artificial
        slack_start = {int(r): nv + s for s, r in enumerate(le) if sign[r] > 0}
        art_rows = np.array([r for r in range(m) if r not in slack_start], dtype=np.int64)
        art = sp.csc_matrix((np.ones(art_rows.size), (art_rows, np.arange(art_rows.size))),
                            shape=(m, art_rows.size))
        self.A = sp.hstack([A, slack, art], format="csc")
        self.AT = self.A.T.tocsr()
        self.m, self.nv, self.ns, self.na = m, nv, le.size, art_rows.size
        self.N = nv + le.size + art_rows.size
        self.b = b
        self.row_sign = sign
        self.upper = np.concatenate([lp.upper, np.full(le.size + art_rows.size, np.inf)])
        self.art = np.arange(nv + le.size, self.N)
        basis = np.empty(m, dtype=np.int64)
        for r, j in slack_start.items():
            basis[r] = j
        basis[art_rows] = self.art
        self.basis = basis
        self.status = np.full(self.N, _LOWER, dtype=np.int8)
        self.status[basis] = _BASIC
        self.movable = np.ones(self.N, dtype=bool)
        self.iterations = 0
        self.refactor()

    def column(self, j):
        a, b = self.A.indptr[j], self.A.indptr[j + 1]
        col = np.zeros(self.m)
        col[self.A.indices[a:b]] = self.A.data[a:b]
        return col

    def nonbasic_value(self):
        x = np.zeros(self.N)
        up = self.status == _UPPER
        x[up] = self.upper[up]
        return x

    def refactor(self):
        if self.m == 0:
            self.Binv = np.zeros((0, 0))
            self.xB = np.zeros(0)
            self.since_refactor = 0
            return
        B = self.A[:, self.basis].toarray()
        self.Binv = np.linalg.inv(B)
        xN = self.nonbasic_value()
        self.xB = self.Binv @ (self.b - self.A @ xN)
        self.since_refactor = 0

    def pivot(self, p, q, w):
        row = self.Binv[p] / w[p]
        self.Binv -= np.outer(w, row)
        self.Binv[p] = row
        self.basis[p] = q
        self.since_refactor += 1

    def solution(self):
        x = self.nonbasic_value()
        x[self.basis] = self.xB
        return x

    def run(self, cost, max_iters):
        """Iterate to optimality for ``cost``. Returns a status string."""
        streak = 0
        while True:
            if self.iterations >= max_iters:
                return "iteration-limit"
            if self.since_refactor >= REFACTOR_EVERY:
                self.refactor()
            y = cost[self.basis] @ self.Binv if self.m else np.zeros(0)
            d = cost - self.AT @ y if self.m else cost.copy()
            viol = np.zeros(self.N)
            lower = (self.status == _LOWER) & self.movable
            upper = (self.status == _UPPER) & self.movable
            viol[lower] = -d[lower]
            viol[upper] = d[upper]
            cand = np.flatnonzero(viol > OPT_TOL)
            if cand.size == 0:
                return "optimal"
            bland = streak >= DEGENERATE_STREAK
            q = int(cand[0]) if bland else int(cand[np.argmax(viol[cand])])
            sigma = 1.0 if self.status[q] == _LOWER else -1.0
            w = self.Binv @ self.column(q)
            delta = -sigma * w

            theta, p, to_upper = self.upper[q], -1, False
            ub = self.upper[self.basis]
            down = delta < -PIVOT_TOL
            up = (delta > PIVOT_TOL) & np.isfinite(ub)
            ratios = np.full(self.m, np.inf)
            ratios[down] = np.maximum(self.xB[down], 0.0) / -delta[down]
            ratios[up] = np.maximum(ub[up] - self.xB[up], 0.0) / delta[up]
            if self.m:
                tmin = ratios.min()
                if tmin < theta:
                    ties = np.flatnonzero(ratios <= tmin + 1e-12)
                    if bland:
                        p = int(ties[np.argmin(self.basis[ties])])
                    else:
                        p = int(ties[np.argmax(np.abs(delta[ties]))])
                    theta = ratios[p]
                    to_upper = bool(up[p])
            if not np.isfinite(theta):
                return "unbounded"

            self.iterations += 1
            self.xB += theta * delta
            streak = streak + 1 if theta <= 1e-12 else 0
            if p < 0:
                self.status[q] = _UPPER if sigma > 0 else _LOWER
                continue
            leaving = self.basis[p]
            self.status[leaving] = _UPPER if to_upper else _LOWER
            self.status[q] = _BASIC
            entering_value = (0.0 if sigma > 0 else self.upper[q]) + sigma * theta
            self.pivot(p, q, w)
            self.xB[p] = entering_value

    def drive_out_artificials(self):
        """Pivot basic artificials (at zero) out; pin those on redundant rows."""
        is_art = np.zeros(self.N, dtype=bool)
        is_art[self.art] = True
        for p in range(self.m):
            if not is_art[self.basis[p]]:
                continue
            row = self.Binv[p] @ self.A  # row p of B^-1 A
            row = np.asarray(row).ravel()
            ok = (~is_art) & (self.status != _BASIC) & (np.abs(row) > 1e-7)
            cand = np.flatnonzero(ok)
            if cand.size == 0:
                continue
            q = int(cand[np.argmax(np.abs(row[cand]))])
            w = self.Binv @ self.column(q)
            value = self.upper[q] if self.status[q] == _UPPER else 0.0
            self.status[self.basis[p]] = _LOWER
            self.status[q] = _BASIC
            self.pivot(p, q, w)
            self.xB[p] = value
        self.refactor()
        self.upper[self.art] = 0.0
        self.movable[self.art] = False
        self.xB = np.where(is_art[self.basis], 0.0, self.xB)


def revised_simplex(lp: LinearProgram, max_iters=100_000):
    """Solve ``lp`` and return an :class:`LpSolution` (never raises on status)."""
    t = _Tableau(lp)
    bscale = max(1.0, float(np.abs(t.b).max(initial=0.0)))
    if t.na:
        cost1 = np.zeros(t.N)
        cost1[t.art] = 1.0
        status = t.run(cost1, max_iters)
        if status == "iteration-limit":
            return _pack(lp, t, status)
        infeas = float(t.solution()[t.art].sum())
        if infeas > FEAS_TOL * bscale:
            return _pack(lp, t, "infeasible")
        t.drive_out_artificials()
    cost2 = np.concatenate([lp.c, np.zeros(t.N - t.nv)])
    status = t.run(cost2, max_iters)
    if status == "optimal":
        t.refactor()
    return _pack(lp, t, status, cost2)


def _pack(lp, t, status, cost=None):
    x_full = t.solution()
    x = np.clip(x_full[: t.nv], 0.0, lp.upper)
    duals = None
    if cost is not None and t.m:
        duals = (cost[t.basis] @ t.Binv) * t.row_sign
    return LpSolution(
        status=status,
        x=x,
        objective=float(lp.c @ x),
        iterations=t.iterations,
        duals=duals,
        method="simplex",
        basis=t.basis.copy(),
    )


def dual_objective(lp, sol):
    """Objective rebuilt from the final basis duals: b@y + sum_j min(d_j, 0) u_j."""
    y = sol.duals if sol.duals is not None else np.zeros(lp.n_rows)
    d = lp.c - lp.A.T @ y
    at_upper = np.isfinite(lp.upper) & (d < 0)
    return float(lp.b @ y + d[at_upper] @ lp.upper[at_upper])
