"""Hottopixx: incremental subgradient on the Lagrangian with dual ascent on beta.

Each sample step touches row ``i`` of C using only row ``i`` of C and the
shared column ``X[:, k]``. Rows are therefore independent between
projections, and the parallel engine gives each worker a disjoint set of row
blocks that it sweeps over the same column sequence (a block-nested loop).
Results are bit-identical for any thread count or block size.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .cleaning import CleanConfig, fit_f
from .errors import DegenerateSolutionError, InvalidInputError
from .matrix import (
    DEFAULT_BLOCK_SIZE,
    ErrorReport,
    FactorizationResult,
    LocalizingMatrix,
    SparseMatrix,
    inf_one_norm,
    residual,
    rmse,
)
from .projection import clip_inplace, project_phi0_inplace

log = logging.getLogger(__name__)

PROJECTIONS = ("full-squish", "clip")
DIAG_SIGNS = ("lagrangian", "as-printed")
DIAG_SCALES = ("per-sample", "per-step")
EARLY_STOP_PATIENCE = 5


def default_cost(f, seed=0, scale=0.1):
    """Distinct costs: ``scale * (1..f) / f`` shuffled by a seeded permutation."""
    rng = np.random.default_rng([seed, 0xC057])
    return scale * (1.0 + rng.permutation(f)) / f


@dataclass
class SgdConfig:
    rank: int
    epochs: int = 50
    primal_step: float = 0.1
    dual_step: float = 0.01
    cost: np.ndarray | None = None
    cost_scale: float = 0.1
    projection: str = "full-squish"
    projection_period: int | None = None
    diag_sign: str = "lagrangian"
    diag_scale: str = "per-sample"
    seed: int = 0
    threads: int = 1
    block_size: int = DEFAULT_BLOCK_SIZE
    early_stop: bool = False
    clean: CleanConfig = field(default_factory=CleanConfig)

    def __post_init__(self):
        if self.rank < 1:
            raise InvalidInputError("rank must be >= 1")
        if self.epochs < 1:
            raise InvalidInputError("epochs must be >= 1")
        if not (self.primal_step > 0 and self.dual_step > 0):
            raise InvalidInputError("step sizes must be positive")
        if self.projection not in PROJECTIONS:
            raise InvalidInputError(f"projection must be one of {PROJECTIONS}")
        if self.diag_sign not in DIAG_SIGNS:
            raise InvalidInputError(f"diag_sign must be one of {DIAG_SIGNS}")
        if self.diag_scale not in DIAG_SCALES:
            raise InvalidInputError(f"diag_scale must be one of {DIAG_SCALES}")
        if self.projection_period is not None and self.projection_period < 1:
            raise InvalidInputError("projection_period must be >= 1")
        if self.threads < 1 or self.block_size < 1:
            raise InvalidInputError("threads and block_size must be >= 1")
        if self.cost is not None:
            self.cost = np.asarray(self.cost, dtype=np.float64)
            if np.unique(self.cost).size != self.cost.size:
                raise InvalidInputError("cost entries must be pairwise distinct")

    def cost_for(self, f):
        if self.cost is None:
            return default_cost(f, self.seed, self.cost_scale)
        if self.cost.shape != (f,):
            raise InvalidInputError(f"cost has length {self.cost.size}, expected {f}")
        return self.cost


@njit(cache=True, nogil=True)
def _sgd_rows(C, indptr, indices, data, cols, r0, r1, sp, diag_step):
    """Apply the sample steps for ``cols`` to rows ``[r0, r1)`` of C."""
    for t in range(cols.shape[0]):
        k = cols[t]
        a = indptr[k]
        b = indptr[k + 1]
        for i in range(r0, r1):
            acc = 0.0
            xi = 0.0
            for q in range(a, b):
                j = indices[q]
                acc += C[i, j] * data[q]
                if j == i:
                    xi = data[q]
            res = xi - acc
            if res > 0.0:
                for q in range(a, b):
                    C[i, indices[q]] += sp * data[q]
            elif res < 0.0:
                for q in range(a, b):
                    C[i, indices[q]] -= sp * data[q]
            C[i, i] -= diag_step[i]


def nonzero_fraction(X):
    """Fraction of nonzeros in each row (the per-row weight of the diagonal term)."""
    return X.row_nnz / float(X.n_cols)


def diagonal_step(X, beta, cost, cfg, mu=None):
    """Per-row amount subtracted from ``C_jj`` on every sample step."""
    mu = nonzero_fraction(X) if mu is None else mu
    price = cost + beta if cfg.diag_sign == "lagrangian" else beta - cost
    step = cfg.primal_step * mu * price
    if cfg.diag_scale == "per-sample":
        step = step / X.n_cols
    return np.ascontiguousarray(step)


def sgd_step(C, X, k, beta, cfg, rows=None, cost=None):
    """One incremental step on sample column ``k`` (in place; returns ``C``)."""
    if not 0 <= k < X.n_cols:
        raise IndexError(f"column {k} out of range")
    cost = cfg.cost_for(X.n_rows) if cost is None else cost
    r0, r1 = rows if rows is not None else (0, C.order)
    step = diagonal_step(X, beta, cost, cfg)
    cols = np.array([k], dtype=np.int64)
    _sgd_rows(C.values, X.indptr, X.indices, X.data, cols, r0, r1, cfg.primal_step, step)
    return C


def parallel_schedule(f, block_size, threads):
    """Split rows into contiguous blocks and deal them round-robin to workers.

    Returns one list of ``(start, stop)`` blocks per worker. A single worker
    gets a single block covering every row.
    """
    if block_size < 1 or threads < 1:
        raise InvalidInputError("block_size and threads must be >= 1")
    if threads == 1:
        return [[(0, f)]] if f else [[]]
    blocks = [(s, min(s + block_size, f)) for s in range(0, f, block_size)]
    workers = [[] for _ in range(min(threads, max(len(blocks), 1)))]
    for b, blk in enumerate(blocks):
        workers[b % len(workers)].append(blk)
    return workers


class _Engine:
    """Row-blocked epoch runner shared by serial and threaded execution."""

    def __init__(self, X, cfg, pool=None):
        self.X = X
        self.cfg = cfg
        f = X.n_rows
        self.cost = cfg.cost_for(f)
        self.mu = nonzero_fraction(X)
        block = cfg.block_size if cfg.threads > 1 else max(f, 1)
        self.row_plan = parallel_schedule(f, block, cfg.threads)
        per = -(-f // max(len(self.row_plan), 1)) if f else 1
        self.col_plan = [(s, min(s + per, f)) for s in range(0, f, max(per, 1))]
        self.pool = pool

    def _map(self, fn, items):
        if self.pool is None or len(items) <= 1:
            for it in items:
                fn(it)
        else:
            list(self.pool.map(fn, items))

    def sweep(self, C, cols, beta):
        X = self.X
        step = diagonal_step(X, beta, self.cost, self.cfg, self.mu)
        cols = np.ascontiguousarray(cols, dtype=np.int64)
        sp = self.cfg.primal_step
        values = C.values

        def work(blocks):
            for r0, r1 in blocks:
                _sgd_rows(values, X.indptr, X.indices, X.data, cols, r0, r1, sp, step)

        self._map(work, self.row_plan)

    def project(self, C):
        values = C.values
        if self.cfg.projection == "clip":
            self._map(lambda rows: clip_inplace(values, rows), self.col_plan)
        else:
            self._map(lambda cols: project_phi0_inplace(values, cols), self.col_plan)

    def epoch(self, C, beta, cols):
        n = cols.size
        period = self.cfg.projection_period or self.X.n_cols
        start = 0
        while start < n:
            stop = min(start + period, n)
            self.sweep(C, cols[start:stop], beta)
            self.project(C)
            start = stop
        return C


def epoch_columns(rng, n):
    """Column indices for one epoch, uniform with replacement."""
    return rng.integers(0, n, size=n)


def run_epoch(C, X, beta, cfg, rng, pool=None):
    """n sample steps with periodic projection; projects again at the end."""
    engine = _Engine(X, cfg, pool)
    return engine.epoch(C, beta, epoch_columns(rng, X.n_cols))


def dual_update(beta, C, r, s_d):
    """Subgradient ascent on the trace multiplier."""
    trace = C.trace() if isinstance(C, LocalizingMatrix) else float(np.trace(C))
    return beta + s_d * (trace - r)


def top_diagonal(diag, cost, r):
    """Indices of the ``r`` largest diagonal entries, ties broken by smaller cost."""
    order = np.lexsort((cost, -np.asarray(diag)))
    return np.sort(order[:r])


@dataclass
class EpochRecord:
    epoch: int
    trace: float
    beta: float
    top_mass: float
    wall_time: float

    def to_json(self):
        return json.dumps(self.__dict__)


def train(X, cfg, on_epoch=None):
    """Run the primal/dual loop and return ``(C, beta, records)``."""
    f, n = X.shape
    if n == 0 or f == 0:
        raise InvalidInputError("cannot factor an empty matrix")
    rng = np.random.default_rng(cfg.seed)
    C = LocalizingMatrix.zeros(f, cfg.block_size)
    beta = 0.0
    records = []
    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    try:
        engine = _Engine(X, cfg, pool)
        r = cfg.rank
        t0 = time.perf_counter()
        last, stable = None, 0
        for ep in range(cfg.epochs):
            engine.epoch(C, beta, epoch_columns(rng, n))
            beta = dual_update(beta, C, r, cfg.dual_step)
            diag = C.diag()
            top = top_diagonal(diag, engine.cost, r)
            rec = EpochRecord(ep + 1, C.trace(), beta, float(diag[top].sum()),
                              time.perf_counter() - t0)
            records.append(rec)
            if on_epoch is not None:
                on_epoch(rec)
            if cfg.early_stop:
                stable = stable + 1 if last is not None and np.array_equal(top, last) else 0
                last = top
                if stable >= EARLY_STOP_PATIENCE:
                    log.info("early stop after epoch %d", ep + 1)
                    break
    finally:
        if pool is not None:
            pool.shutdown()
    return C, beta, records


def hottopixx(X, cfg, on_epoch=None):
    """Factor ``X`` by Hottopixx; ``cfg.rank`` hott rows are selected."""
    if cfg.rank > X.n_rows:
        raise InvalidInputError(f"rank {cfg.rank} exceeds the {X.n_rows} rows of X")
    t0 = time.perf_counter()
    C, beta, records = train(X, cfg, on_epoch)
    cost = cfg.cost_for(X.n_rows)
    diag = C.diag()
    if not np.any(diag > 0):
        raise DegenerateSolutionError(
            "diagonal of C is identically zero after training; "
            "increase the primal step or the number of epochs"
        )
    hott = top_diagonal(diag, cost, cfg.rank)
    W = X.rows(hott)
    F = fit_f(X, W, cfg.clean)
    elapsed = time.perf_counter() - t0
    R = residual(X, F, W)
    report = ErrorReport(inf_one_norm(R), rmse(X, F, W), None, elapsed)
    return FactorizationResult(hott, F, W, report, "hottopixx", "ok", records, C)


def with_threads(cfg, threads):
    return replace(cfg, threads=threads)
