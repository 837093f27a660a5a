"""Synthetic separable instances with ground truth.

Construction: r hott topics drawn uniformly from the simplex in R^n, each
repeated ``d`` extra times, the remaining rows random convex combinations of
the topics, rows shuffled, and finally bounded l1 noise on every row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, SepNMFError
from .geometry import margin_d0, robust_alpha, sample_simplex
from .matrix import SparseMatrix, inf_one_norm

MIN_ALPHA = 0.01
ALPHA_ATTEMPTS = 100

# sub-stream tags so each stage draws from its own generator
_TOPICS, _MIX, _PERM, _NOISE = 1, 2, 3, 4


def noise_bound(eta, alpha):
    """Per-row l1 noise radius ``eta * alpha^2 / (20 + 13 alpha)``."""
    return eta * alpha**2 / (20.0 + 13.0 * alpha)


@dataclass
class SeparableInstance:
    X: SparseMatrix
    Y: np.ndarray
    topics: np.ndarray          # r x n hott topic rows
    topic_of: np.ndarray        # per row: topic id for hott copies, -1 for mixtures
    M: np.ndarray               # mixture weights of the non-hott rows, in row order
    epsilon: float
    alpha: float
    d0: float
    params: dict = field(default_factory=dict)

    @property
    def rank(self):
        return self.topics.shape[0]

    @property
    def hott(self):
        """Every row that is a copy of some topic, sorted."""
        return np.flatnonzero(self.topic_of >= 0)

    @property
    def mixture_rows(self):
        return np.flatnonzero(self.topic_of < 0)

    @property
    def groups(self):
        """Row indices of each topic's copies."""
        return [np.flatnonzero(self.topic_of == t) for t in range(self.rank)]

    @property
    def F_true(self):
        F = np.zeros((self.topic_of.size, self.rank))
        h = self.hott
        F[h, self.topic_of[h]] = 1.0
        F[self.mixture_rows] = self.M
        return F

    @property
    def noise_bound(self):
        return noise_bound(self.params.get("eta", 0.0), self.alpha)

    def hott_recall(self, selected):
        """Fraction of topics with at least one selected copy."""
        sel = np.asarray(selected, dtype=np.int64)
        hit = {int(t) for t in self.topic_of[sel] if t >= 0}
        return len(hit) / self.rank

    def exact_recovery(self, selected):
        """True when the selection holds exactly one copy of every topic."""
        sel = np.asarray(selected, dtype=np.int64)
        t = self.topic_of[sel]
        return bool(sel.size == self.rank and np.all(t >= 0)
                    and np.unique(t).size == self.rank)


def _rng(seed, tag):
    return np.random.default_rng([int(seed), tag])


def _sample_topics(r, n, seed):
    rng = _rng(seed, _TOPICS)
    for _ in range(ALPHA_ATTEMPTS):
        T = np.stack([sample_simplex(n, rng) for _ in range(r)])
        alpha = robust_alpha(T)
        if alpha > MIN_ALPHA:
            return T, alpha
    raise SepNMFError(f"no topic draw with alpha > {MIN_ALPHA} in {ALPHA_ATTEMPTS} attempts")


def _l1_sphere(rng, shape):
    """Directions uniform on the unit l1 sphere (normalized Laplace draws)."""
    g = rng.laplace(size=shape)
    norms = np.abs(g).sum(axis=1, keepdims=True)
    return g / np.where(norms > 0, norms, 1.0)


def add_noise(Y, bound, rng):
    """Perturb every row by l1 noise of radius at most ``bound``.

    A direction uniform on the l1 sphere is scaled by a radius uniform on
    [0, bound]. Negative entries are clipped and rows renormalized; since
    both steps can stretch the perturbation, any row whose final distance to
    Y exceeds ``bound`` is pulled back along the segment toward its clean
    row, which keeps it on the simplex.
    """
    f, n = Y.shape
    radius = rng.uniform(0.0, bound, size=(f, 1))
    X = np.maximum(Y + radius * _l1_sphere(rng, (f, n)), 0.0)
    sums = X.sum(axis=1, keepdims=True)
    X = np.where(sums > 0, X / np.where(sums > 0, sums, 1.0), Y)
    err = np.abs(X - Y).sum(axis=1)
    over = err > bound
    if over.any():
        shrink = (bound / err[over])[:, None]
        X[over] = Y[over] + shrink * (X[over] - Y[over])
    return X


def generate(f, n, r, d, eta, seed):
    """Build a seeded separable instance; see the module docstring."""
    if r < 2:
        raise InvalidInputError("rank must be >= 2")
    if d < 0 or n < 1 or eta < 0:
        raise InvalidInputError("need d >= 0, n >= 1 and eta >= 0")
    n_hott = r * (d + 1)
    if f < n_hott:
        raise InvalidInputError(f"f = {f} is smaller than r(d+1) = {n_hott}")
    T, alpha = _sample_topics(r, n, seed)

    mix_rng = _rng(seed, _MIX)
    M_unordered = np.stack([sample_simplex(r, mix_rng) for _ in range(f - n_hott)]) \
        if f > n_hott else np.zeros((0, r))
    topic_unordered = np.concatenate([np.repeat(np.arange(r), d + 1),
                                      np.full(f - n_hott, -1)])
    perm = _rng(seed, _PERM).permutation(f)
    topic_of = topic_unordered[perm]
    mix_pos = np.flatnonzero(topic_of < 0)
    # mixture rows keep their draw order after the shuffle
    M = M_unordered[perm[mix_pos] - n_hott]

    Y = np.empty((f, n))
    hott_pos = np.flatnonzero(topic_of >= 0)
    Y[hott_pos] = T[topic_of[hott_pos]]
    if mix_pos.size:
        Y[mix_pos] = M @ T

    bound = noise_bound(eta, alpha)
    Xd = Y.copy() if eta == 0 else add_noise(Y, bound, _rng(seed, _NOISE))
    eps = inf_one_norm(Xd - Y)
    params = {"f": f, "n": n, "r": r, "d": d, "eta": float(eta), "seed": int(seed)}
    return SeparableInstance(
        X=SparseMatrix.from_dense(Xd),
        Y=Y,
        topics=T,
        topic_of=topic_of,
        M=M,
        epsilon=eps,
        alpha=alpha,
        d0=margin_d0(Y, hott_pos),
        params=params,
    )


@dataclass
class Lemma1Report:
    passed: bool
    worst_margin: float
    checked: int
    violations: int


def lemma1_check(Y, topics, rows, M, grid=None, tol=1e-12):
    """Check ``M[l, i] <= 1 - delta/2`` whenever ``||Y_l - T_i||_1 > delta``.

    ``rows`` are the non-hott rows of Y with weights ``M``. The bound is
    tested on a grid of delta values and at its tightest point, delta just
    below the distance. Pairs at distance zero are vacuous and skipped.
    """
    grid = np.linspace(0.0, 2.0, 201) if grid is None else np.asarray(grid)
    worst, checked, bad = np.inf, 0, 0
    for a, l in enumerate(rows):
        dist = np.abs(Y[l] - topics).sum(axis=1)
        for i in range(topics.shape[0]):
            if dist[i] <= tol:
                continue
            deltas = grid[grid < dist[i]]
            checked += deltas.size + 1
            bad += int(np.count_nonzero(M[a, i] > 1 - deltas / 2 + tol))
            margin = 1 - dist[i] / 2 - M[a, i]
            if margin < -tol:
                bad += 1
            worst = min(worst, margin)
    return Lemma1Report(bad == 0, float(worst), checked, bad)


def lemma1_diagnostic(inst: SeparableInstance, grid=None):
    return lemma1_check(inst.Y, inst.topics, inst.mixture_rows, inst.M, grid)
