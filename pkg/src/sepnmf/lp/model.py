"""Linear program container: minimize c @ x s.t. A x {<=, =} b, 0 <= x <= upper."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import InvalidInputError

LE, EQ = "<=", "=="
STATUSES = ("optimal", "infeasible", "unbounded", "iteration-limit")


@dataclass
class LinearProgram:
    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    senses: np.ndarray
    upper: np.ndarray | None = None
    var_names: list | None = None
    row_names: list | None = None
    name: str = "LP"

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64).ravel()
        nv = self.c.size
        A = sp.csr_matrix(self.A, dtype=np.float64)
        if A.shape[1] != nv and A.shape[0] == 0:
            A = sp.csr_matrix((0, nv))
        b = np.asarray(self.b, dtype=np.float64).ravel()
        senses = np.asarray(self.senses, dtype="<U2").ravel()
        if A.shape != (b.size, nv):
            raise InvalidInputError(f"A has shape {A.shape}, expected ({b.size}, {nv})")
        if senses.size != b.size:
            raise InvalidInputError("one sense per constraint row is required")
        ge = senses == ">="
        if ge.any():
            # store >= rows negated so every row is <= or ==
            flip = np.where(ge, -1.0, 1.0)
            A = sp.diags(flip) @ A
            b = b * flip
            senses = np.where(ge, LE, senses)
        bad = ~np.isin(senses, (LE, EQ))
        if bad.any():
            raise InvalidInputError(f"unknown constraint sense {senses[bad][0]!r}")
        upper = np.full(nv, np.inf) if self.upper is None else np.asarray(self.upper, dtype=np.float64).ravel()
        if upper.size != nv:
            raise InvalidInputError("upper bounds must match the variable count")
        if np.any(upper < 0) or np.any(np.isnan(upper)):
            raise InvalidInputError("upper bounds must be >= 0")
        for name, arr in (("c", self.c), ("b", b), ("A", A.data)):
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"{name} has non-finite entries")
        self.A = sp.csr_matrix(A)
        self.A.sum_duplicates()
        self.b = b
        self.senses = senses
        self.upper = upper

    @property
    def n_vars(self):
        return self.c.size

    @property
    def n_rows(self):
        return self.b.size

    def residuals(self, x):
        """Constraint violation per row (positive means violated)."""
        ax = self.A @ x
        viol = ax - self.b
        eq = self.senses == EQ
        viol[eq] = np.abs(viol[eq])
        return viol

    def is_feasible(self, x, tol=1e-7):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_vars,):
            return False
        if self.n_rows and self.residuals(x).max() > tol:
            return False
        return bool(x.min(initial=0.0) >= -tol and np.all(x <= self.upper + tol))


@dataclass
class LpSolution:
    status: str
    x: np.ndarray
    objective: float
    iterations: int
    duals: np.ndarray | None = None
    method: str = ""
    basis: np.ndarray | None = field(default=None, repr=False)

    @property
    def ok(self):
        return self.status == "optimal"


class LPBuilder:
    """Incremental row-wise assembly of a :class:`LinearProgram`."""

    def __init__(self, n_vars):
        self.n_vars = n_vars
        self._rows, self._cols, self._vals = [], [], []
        self._b, self._senses = [], []

    @property
    def n_rows(self):
        return len(self._b)

    def add_row(self, cols, vals, sense, rhs):
        r = len(self._b)
        cols = np.asarray(cols, dtype=np.int64)
        self._rows.append(np.full(cols.size, r, dtype=np.int64))
        self._cols.append(cols)
        self._vals.append(np.broadcast_to(np.asarray(vals, dtype=np.float64), cols.shape))
        self._b.append(float(rhs))
        self._senses.append(sense)
        return r

    def add_rows(self, rows, cols, vals, senses, rhs):
        """Add a batch of rows given in coordinate form with local row ids."""
        rows = np.asarray(rows, dtype=np.int64)
        rhs = np.asarray(rhs, dtype=np.float64).ravel()
        base = len(self._b)
        self._rows.append(rows + base)
        self._cols.append(np.asarray(cols, dtype=np.int64))
        self._vals.append(np.asarray(vals, dtype=np.float64))
        self._b.extend(rhs.tolist())
        senses = np.broadcast_to(np.asarray(senses), rhs.shape)
        self._senses.extend(senses.tolist())
        return np.arange(base, base + rhs.size)

    def build(self, c, upper=None, name="LP"):
        if self._rows:
            rows = np.concatenate(self._rows)
            cols = np.concatenate(self._cols)
            vals = np.concatenate(self._vals)
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
            vals = np.zeros(0)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(len(self._b), self.n_vars))
        return LinearProgram(c, A, np.array(self._b), np.array(self._senses, dtype="<U2"),
                             upper, name=name)
