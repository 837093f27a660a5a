"""Experiment grid, performance profiles, and thread-scaling runs."""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .agkm import AgkmConfig, agkm_factor
from .errors import ConcurrencyError, InvalidInputError, SepNMFError
from .exact import PhiLpConfig, factor_exact
from .matrix import SparseMatrix
from .hottopixx import SgdConfig, hottopixx, top_diagonal, train
from .synth import generate

log = logging.getLogger(__name__)

ALGORITHMS = ("lp", "hottopixx", "hottopixx-fast", "agkm")
METRICS = {"ionorm": "inf_one_error", "rmse": "rmse", "time": "wall_time"}
FAST_EPOCHS = 4


def default_taus():
    return np.logspace(0.0, 3.0, 64)


@dataclass
class GridSpec:
    f: list
    n: list
    r: list
    d: list
    eta: list

    @classmethod
    def from_dict(cls, spec):
        missing = [k for k in ("f", "n", "r", "d", "eta") if k not in spec]
        if missing:
            raise InvalidInputError(f"grid is missing {missing}")
        as_list = {k: list(np.atleast_1d(spec[k]).tolist()) for k in ("f", "n", "r", "d", "eta")}
        return cls(**as_list)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def cells(self):
        return list(itertools.product(self.f, self.n, self.r, self.d, self.eta))


@dataclass
class ExperimentRecord:
    f: int
    n: int
    r: int
    d: int
    eta: float
    rep: int
    seed: int
    algorithm: str
    inf_one_error: float
    rmse: float
    wall_time: float
    hott_recall: float
    status: str
    epsilon: float = 0.0
    alpha: float = 0.0

    @property
    def key(self):
        return (self.f, self.n, self.r, self.d, self.eta, self.rep, self.seed)


CSV_COLUMNS = [f.name for f in fields(ExperimentRecord)]


def cell_seed(seed, f, n, r, d, eta, rep):
    """Deterministic per-instance seed derived from the grid seed and the cell."""
    ss = np.random.SeedSequence([int(seed), f, n, r, d, int(round(eta * 1000)), rep])
    return int(ss.generate_state(1)[0])


def run_algorithm(name, inst, seed=0, threads=1):
    """Run one algorithm on a synthetic instance; the caller handles errors."""
    r = inst.rank
    if name == "lp":
        return factor_exact(inst.X, PhiLpConfig(tau=2 * inst.epsilon, rank=r, seed=seed))
    if name in ("hottopixx", "hottopixx-fast"):
        epochs = 50 if name == "hottopixx" else FAST_EPOCHS
        return hottopixx(inst.X, SgdConfig(rank=r, epochs=epochs, seed=seed, threads=threads))
    if name == "agkm":
        with warnings.catch_warnings():
            # the high-noise cells are meant to leave the AGKM guarantee
            warnings.simplefilter("ignore")
            cfg = AgkmConfig(alpha=inst.alpha, epsilon=inst.epsilon, rank=r)
        return agkm_factor(inst.X, cfg)
    raise InvalidInputError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")


def _run_cell(args, on_instance=None):
    (f, n, r, d, eta), rep, seed, algorithms, threads = args
    s = cell_seed(seed, f, n, r, d, eta, rep)
    inst = generate(f, n, r, d, eta, s)
    if on_instance is not None:
        on_instance(inst)
    out = []
    for name in algorithms:
        base = dict(f=f, n=n, r=r, d=d, eta=float(eta), rep=rep, seed=s, algorithm=name,
                    epsilon=inst.epsilon, alpha=inst.alpha)
        try:
            res = run_algorithm(name, inst, seed=s, threads=threads)
        except SepNMFError as exc:
            log.info("%s failed on %s: %s", name, base, exc)
            out.append(ExperimentRecord(inf_one_error=math.inf, rmse=math.inf, wall_time=math.inf,
                                        hott_recall=0.0, status="failed", **base))
            continue
        rep_ = res.report
        out.append(ExperimentRecord(inf_one_error=rep_.inf_one_error, rmse=rep_.rmse,
                                    wall_time=rep_.wall_time,
                                    hott_recall=inst.hott_recall(res.hott), status="ok", **base))
    return out


def run_grid(grid, algorithms, repetitions, seed=0, workers=1, threads=1, on_instance=None):
    """Run every algorithm on every (cell, repetition) instance.

    ``workers > 1`` spreads cells over processes; solver threading is then
    forced to one thread so the two levels never nest. ``on_instance`` is
    called with each generated instance (serial runs only).
    """
    if isinstance(grid, dict):
        grid = GridSpec.from_dict(grid)
    for a in algorithms:
        if a not in ALGORITHMS:
            raise InvalidInputError(f"unknown algorithm {a!r}; choose from {ALGORITHMS}")
    if workers > 1:
        if on_instance is not None:
            raise InvalidInputError("on_instance needs a serial run (workers=1)")
        threads = 1
    jobs = [(cell, rep, seed, tuple(algorithms), threads)
            for cell in grid.cells() for rep in range(repetitions)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_run_cell, jobs))
    else:
        chunks = [_run_cell(j, on_instance) for j in jobs]
    return [rec for chunk in chunks for rec in chunk]


def write_records(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for rec in records:
            row = asdict(rec)
            for k, v in row.items():
                if isinstance(v, float):
                    row[k] = format(v, ".17g")
            w.writerow(row)


def read_records(path):
    casts = {f.name: f.type for f in fields(ExperimentRecord)}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vals = {}
            for k, v in row.items():
                t = casts[k]
                vals[k] = int(v) if t in (int, "int") else float(v) if t in (float, "float") else v
            out.append(ExperimentRecord(**vals))
    return out


@dataclass
class ProfileCurve:
    algorithm: str
    taus: np.ndarray
    values: np.ndarray


def _metric_field(metric):
    if metric in METRICS:
        return METRICS[metric]
    if metric in METRICS.values():
        return metric
    raise InvalidInputError(f"unknown metric {metric!r}; choose from {sorted(METRICS)}")


def performance_profile(records, metric="ionorm", taus=None):
    """Fraction of experiments on which each algorithm is within ``tau`` of the best.

    Failed runs, and algorithms missing from an experiment, count as
    ``Q = inf``: they never fall within any factor of the best.
    """
    attr = _metric_field(metric)
    taus = default_taus() if taus is None else np.sort(np.asarray(taus, dtype=np.float64))
    records = list(records)
    if not records:
        raise InvalidInputError("no records to profile")
    algos = sorted({r.algorithm for r in records})
    keys = sorted({r.key for r in records})
    kidx = {k: i for i, k in enumerate(keys)}
    aidx = {a: i for i, a in enumerate(algos)}
    Q = np.full((len(keys), len(algos)), np.inf)
    for rec in records:
        q = getattr(rec, attr)
        if rec.status == "ok" and np.isfinite(q):
            Q[kidx[rec.key], aidx[rec.algorithm]] = q
    best = Q.min(axis=1)
    curves = []
    for a, j in aidx.items():
        ok = np.isfinite(Q[:, j])
        frac = [np.count_nonzero(ok & (Q[:, j] <= t * best)) / len(keys) for t in taus]
        curves.append(ProfileCurve(a, taus.copy(), np.array(frac)))
    return curves


def write_profile_csv(path, curves):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau"] + [c.algorithm for c in curves])
        for t in range(curves[0].taus.size):
            w.writerow([format(curves[0].taus[t], ".17g")]
                       + [format(c.values[t], ".17g") for c in curves])


_COLORS = ("#1b6ca8", "#d1495b", "#2e933c", "#edae49", "#6c4f9c", "#444444")


def profile_svg(curves, title="", width=480, height=320):
    """Standalone SVG line chart of the profiles on a log10 tau axis."""
    left, right, top, bottom = 50, 110, 30, 40
    pw, ph = width - left - right, height - top - bottom
    taus = curves[0].taus
    lo, hi = math.log10(taus[0]), math.log10(taus[-1])
    span = hi - lo or 1.0

    def xy(t, v):
        return left + pw * (math.log10(t) - lo) / span, top + ph * (1 - v)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'font-family="sans-serif" font-size="11">',
             f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>',
             f'<text x="{left}" y="18" font-size="13">{title}</text>']
    for v in (0.0, 0.5, 1.0):
        _, y = xy(taus[0], v)
        parts.append(f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end">{v:g}</text>')
    for e in range(int(math.floor(lo)), int(math.ceil(hi)) + 1):
        x, _ = xy(10.0**e, 0)
        parts.append(f'<text x="{x:.1f}" y="{top + ph + 16}" text-anchor="middle">1e{e}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{height - 6}" text-anchor="middle">tau</text>')
    for c, curve in enumerate(curves):
        color = _COLORS[c % len(_COLORS)]
        pts = " ".join("{:.1f},{:.1f}".format(*xy(t, v)) for t, v in zip(curve.taus, curve.values))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 * (c + 1)
        parts.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 28}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 32}" y="{ly}">{curve.algorithm}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


@dataclass
class SpeedupRow:
    threads: int
    wall_time: float
    speedup: float


def speedup_run(X, thread_counts, cfg: SgdConfig):
    """Train at each thread count, check outputs agree exactly, and time them.

    Timing covers training only; extraction and cleaning are serial and the
    same for every thread count. Speedups are relative to the first entry of
    ``thread_counts`` (normally 1).
    """
    rows, ref = [], None
    base = None
    # load the compiled kernels once so the first timed run does not pay for it
    warm = SparseMatrix.from_dense(np.eye(2))
    train(warm, replace(cfg, rank=1, epochs=1, cost=None, threads=max(thread_counts)))
    for t in thread_counts:
        run_cfg = replace(cfg, threads=int(t))
        t0 = time.perf_counter()
        C, beta, _ = train(X, run_cfg)
        elapsed = time.perf_counter() - t0
        hott = top_diagonal(C.diag(), run_cfg.cost_for(X.n_rows), cfg.rank)
        if ref is None:
            ref = (C.values.copy(), hott, beta)
            base = elapsed
        elif not (np.array_equal(ref[0], C.values) and np.array_equal(ref[1], hott)
                  and ref[2] == beta):
            raise ConcurrencyError(
                f"{t}-thread output differs from the {thread_counts[0]}-thread run"
            )
        rows.append(SpeedupRow(int(t), elapsed, base / elapsed if elapsed > 0 else math.inf))
    return rows, ref[1]
