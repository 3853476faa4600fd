"""Choose the number of strata with X-means and cut the chronologically
sorted projects into that many contiguous windows."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from bellwether import _kernels
from bellwether.dataset import RATIO_FEATURES
from bellwether.design import ratio_matrix
from bellwether.errors import ConfigError

MAX_LLOYD_ITER = 100


@dataclass(frozen=True)
class Window:
    """A contiguous run of chronologically sorted projects.

    ``start`` is the offset of the first record in the parent sequence.
    """

    index: int
    records: tuple
    start: int = 0
    transform_log: tuple = ()

    def __len__(self):
        return len(self.records)

    @property
    def stop(self):
        return self.start + len(self.records)

    @property
    def ids(self):
        return [r.id for r in self.records]

    def feature_matrix(self, names):
        return ratio_matrix(self.records, names)

    @property
    def effort_vector(self):
        return ratio_matrix(self.records, ["effort"])[:, 0]


@dataclass(frozen=True)
class ClusteringResult:
    q: int
    centroids: np.ndarray
    assignments: np.ndarray
    bic: float
    trace: tuple = field(default=())  # (k, bic) for every model the search fitted


def clustering_features(ps):
    return [name for name, kind in ps.feature_schema if kind == "ratio" and name in RATIO_FEATURES]


def farthest_point_init(X, k, rng):
    """Seeded first centre, then repeatedly the point farthest from all chosen."""
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    return X[chosen].copy()


def kmeans(X, centroids, max_iter=MAX_LLOYD_ITER):
    """Lloyd iterations until assignments stop changing.

    An emptied cluster keeps its previous centre.
    """
    C = np.array(centroids, dtype=np.float64)
    labels = None
    for _ in range(max_iter):
        new_labels, _ = _kernels.nearest_centroid(X, C)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(C.shape[0]):
            members = X[labels == j]
            if members.shape[0]:
                C[j] = members.mean(axis=0)
    labels, d2 = _kernels.nearest_centroid(X, C)
    return labels, C, float(d2.sum())


def bic_score(X, labels, k, sse):
    """BIC of a spherical, shared-variance Gaussian mixture with hard assignment.

    Larger is better. Free parameters are counted as ``k * (p + 1) + 1``.
    """
    n, p = X.shape
    if n - k <= 0:
        return -math.inf
    counts = np.bincount(labels, minlength=k)
    counts = counts[counts > 0]
    sigma2 = sse / (p * (n - k))
    floor = 1e-12 * max(float(X.var(axis=0).mean()), 1e-300)
    sigma2 = max(sigma2, floor)
    loglik = (float(np.sum(counts * np.log(counts / n)))
              - n * p / 2.0 * math.log(2 * math.pi * sigma2)
              - sse / (2.0 * sigma2))
    n_params = k * (p + 1) + 1
    return loglik - n_params / 2.0 * math.log(n)


def _n_distinct(X):
    return np.unique(X, axis=0).shape[0]


def xmeans_matrix(X, kmin=2, kmax=10, seed=0):
    """X-means on a raw feature matrix. See :func:`xmeans`."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if kmin < 1 or kmax < kmin:
        raise ConfigError(f"need 1 <= kmin <= kmax, got kmin={kmin}, kmax={kmax}")
    if n < kmax:
        raise ConfigError(f"n={n} is smaller than kmax={kmax}")
    rng = np.random.default_rng(seed)
    distinct = _n_distinct(X)
    k = min(kmin, distinct)
    labels, C, sse = kmeans(X, farthest_point_init(X, k, rng))
    models = {k: (bic_score(X, labels, k, sse), C, labels)}

    while k < kmax:
        proposals = []
        for j in range(C.shape[0]):
            pts = X[labels == j]
            if pts.shape[0] < 3 or _n_distinct(pts) < 2:
                continue
            parent_sse = float(((pts - C[j]) ** 2).sum())
            parent_bic = bic_score(pts, np.zeros(pts.shape[0], dtype=np.intp), 1, parent_sse)
            child_labels, children, child_sse = kmeans(pts, farthest_point_init(pts, 2, rng))
            gain = bic_score(pts, child_labels, 2, child_sse) - parent_bic
            if gain > 0:
                proposals.append((gain, j, children))
        if not proposals:
            break
        # largest gains first; never exceed kmax centres
        proposals.sort(key=lambda t: (-t[0], t[1]))
        proposals = proposals[:kmax - k]
        split = {j: children for _, j, children in proposals}
        new_C = []
        for j in range(C.shape[0]):
            new_C.extend(split[j] if j in split else [C[j]])
        k = len(new_C)
        labels, C, sse = kmeans(X, np.array(new_C))
        models[k] = (bic_score(X, labels, k, sse), C, labels)

    trace = tuple(sorted((kk, b) for kk, (b, _, _) in models.items()))
    best_k = max(models, key=lambda kk: (models[kk][0], -kk))
    bic, C, labels = models[best_k]
    return ClusteringResult(best_k, C, labels, bic, trace)


def xmeans(ps, kmin=2, kmax=None, seed=0, features=None):
    """Pick the number of strata by BIC-guided centroid splitting.

    Clusters the ratio features only. ``kmax`` defaults to
    ``min(10, n // 30)`` (at least ``kmin``).
    """
    n = len(ps)
    if kmax is None:
        kmax = max(kmin, min(10, n // 30))
    features = features or clustering_features(ps)
    X = ratio_matrix(ps.records, features)
    return xmeans_matrix(X, kmin, kmax, seed)


def stratum_sizes(n, q):
    """Near-equal sizes; the most recent windows absorb the remainder."""
    if q < 1:
        raise ConfigError("q must be >= 1")
    if q > n:
        raise ConfigError(f"cannot cut {n} records into {q} strata")
    base, rem = divmod(n, q)
    return [base + (1 if i >= q - rem else 0) for i in range(q)]


def stratify(ps, q):
    """Cut the (sorted) set into ``q`` contiguous windows, window ``q`` newest."""
    sizes = stratum_sizes(len(ps), q)
    windows, pos = [], 0
    for i, size in enumerate(sizes, start=1):
        windows.append(Window(i, ps.records[pos:pos + size], pos, ps.transform_log))
        pos += size
    return windows


def window_assignments(windows):
    """(record id, window index) pairs for CSV export."""
    return [(rid, w.index) for w in windows for rid in w.ids]
