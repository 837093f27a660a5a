"""AGKM baseline: keep rows far from the hull of distant rows, then cluster."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .cleaning import CleanConfig, fit_f
from .errors import DegenerateSolutionError, InvalidInputError
from .geometry import l1_dist_to_hull
from .matrix import ErrorReport, FactorizationResult, as_sparse, inf_one_norm, pairwise_l1, residual, rmse

# LP round-off in hull distances; rows inside the hull come back near 1e-16
HULL_TOL = 1e-9


def noise_limit(alpha):
    """Largest epsilon covered by the AGKM guarantee."""
    return alpha**2 / (20.0 + 13.0 * alpha)


@dataclass
class AgkmConfig:
    alpha: float
    epsilon: float
    rank: int | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidInputError("alpha must be > 0")
        if not self.epsilon >= 0:
            raise InvalidInputError("epsilon must be >= 0")
        if self.epsilon > noise_limit(self.alpha):
            warnings.warn(
                f"epsilon = {self.epsilon:.3g} exceeds alpha^2/(20+13 alpha) = "
                f"{noise_limit(self.alpha):.3g}; the AGKM error bound does not apply",
                stacklevel=2,
            )

    @property
    def far(self):
        """Distance beyond which a row enters N_k."""
        return 5 * self.epsilon / self.alpha + 2 * self.epsilon

    @property
    def link(self):
        """Clustering threshold on D."""
        return 10 * self.epsilon / self.alpha + 6 * self.epsilon


def candidate_rows(Xd, D, cfg: AgkmConfig):
    """Rows whose hull distance to their far neighbours exceeds 2 epsilon.

    The comparison carries a ``HULL_TOL`` slack so that rows inside the hull
    are not kept on round-off when epsilon is zero.

    Returns ``(kept, delta)``; ``delta[k]`` is ``inf`` when no row is far
    enough from row ``k`` to form a hull.
    """
    f = Xd.shape[0]
    delta = np.full(f, np.inf)
    for k in range(f):
        near = (D[k] >= cfg.far) & (D[k] > 0)
        if near.any():
            delta[k] = l1_dist_to_hull(Xd[k], Xd[near]).distance
    return np.flatnonzero(delta > 2 * cfg.epsilon + HULL_TOL), delta


def cluster_representatives(D, kept, link):
    """Connected components of the threshold graph on ``kept``; lowest index each."""
    sub = D[np.ix_(kept, kept)] <= link
    n_comp, labels = connected_components(sp.csr_matrix(sub), directed=False)
    reps = np.array([kept[labels == c].min() for c in range(n_comp)], dtype=np.int64)
    return np.sort(reps), labels


def agkm_factor(X, cfg: AgkmConfig, clean=None):
    X = as_sparse(X)
    t0 = time.perf_counter()
    Xd = X.to_dense()
    D = pairwise_l1(Xd)
    kept, delta = candidate_rows(Xd, D, cfg)
    if kept.size == 0:
        raise DegenerateSolutionError("no row passed the hull-distance test; epsilon may be too large")
    hott, labels = cluster_representatives(D, kept, cfg.link)
    W = X.rows(hott)
    F = fit_f(X, W, clean or CleanConfig())
    elapsed = time.perf_counter() - t0
    report = ErrorReport(inf_one_norm(residual(X, F, W)), rmse(X, F, W), None, elapsed)
    diag = {"kept": kept.tolist(), "clusters": int(hott.size),
            "delta": [float(v) for v in delta]}
    return FactorizationResult(hott, F, W, report, "agkm", "ok", [diag])
