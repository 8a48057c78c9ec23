"""Agglomerative clustering via Lance-Williams updates, and dendrogram cuts."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .._validation import check_matrix, check_n_clusters
from ..exceptions import ConfigurationError
from .distance import Metric, pairwise_distances
from .result import ClusteringResult


TIE_RTOL = 1e-12


class Linkage(str, Enum):
    WARD = "ward"
    SINGLE = "single"
    COMPLETE = "complete"
    AVERAGE = "average"


def check_pairing(metric, linkage):
    metric, linkage = Metric(metric), Linkage(linkage)
    if linkage is Linkage.WARD and metric is not Metric.EUCLIDEAN:
        raise ConfigurationError(f"ward linkage requires euclidean metric, got {metric.value}")
    return metric, linkage


@dataclass(frozen=True)
class Dendrogram:
    """Merge tree in the usual ``(left, right, height, size)`` row layout.

    Leaves are ``0..N-1``; the cluster created by merge ``i`` gets id
    ``N + i``.  ``left < right`` in every row.
    """

    merges: np.ndarray
    n_leaves: int
    metric: str | None = None
    linkage: str | None = None

    @property
    def heights(self) -> np.ndarray:
        return self.merges[:, 2]

    def steps(self):
        for left, right, height, size in self.merges:
            yield int(left), int(right), float(height), int(size)


def linkage_tree(D, linkage="average") -> Dendrogram:
    """Build the full merge tree from a precomputed distance matrix.

    At every step the closest pair of active clusters is merged; distances
    equal within ``TIE_RTOL`` are resolved by the smallest
    ``(min id, max id)`` pair.
    Average linkage is unweighted (mean over all cross-cluster point pairs)
    and is tracked through pairwise distance sums.  Ward distances follow
    the Lance-Williams recurrence, so heights equal
    ``sqrt(2 n_a n_b / (n_a + n_b)) * ||c_a - c_b||``.
    """
    linkage = Linkage(linkage)
    D = np.array(D, dtype=np.float64)
    n = D.shape[0]
    if D.ndim != 2 or D.shape[1] != n:
        raise ValueError("distance matrix must be square")
    if n < 2:
        raise ValueError("need at least 2 points")

    dist = D.copy()
    np.fill_diagonal(dist, np.inf)
    sums = D.copy() if linkage is Linkage.AVERAGE else None
    ids = np.arange(n)
    sizes = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    merges = np.empty((n - 1, 4))
    # exact per-row minimum and the first column attaining it
    row_arg = np.argmin(dist, axis=1)
    row_min = dist[np.arange(n), row_arg]

    for step in range(n - 1):
        # recurrences drift by a few ulps, so near-equal distances count as ties
        low = row_min.min()
        limit = low + TIE_RTOL * abs(low)
        rows = np.flatnonzero(row_min <= limit)
        if rows.size == 2 and row_arg[rows[0]] == rows[1]:
            a, b = rows
        else:
            pairs = [(r, c) for r in rows for c in np.flatnonzero(dist[r] <= limit)]
            lo = np.array([min(ids[r], ids[c]) for r, c in pairs])
            hi = np.array([max(ids[r], ids[c]) for r, c in pairs])
            a, b = pairs[np.lexsort((hi, lo))[0]]
        if ids[a] > ids[b]:
            a, b = b, a
        height = dist[a, b]
        na, nb = sizes[a], sizes[b]
        merges[step] = (ids[a], ids[b], height, na + nb)

        others = active.copy()
        others[[a, b]] = False
        if linkage is Linkage.SINGLE:
            new = np.minimum(dist[a], dist[b])
        elif linkage is Linkage.COMPLETE:
            new = np.maximum(dist[a], dist[b])
        elif linkage is Linkage.AVERAGE:
            sums[a] = sums[a] + sums[b]
            sums[:, a] = sums[a]
            new = sums[a] / ((na + nb) * sizes)
        else:
            nk = sizes
            sq = (na + nk) * dist[a] ** 2 + (nb + nk) * dist[b] ** 2 - nk * height**2
            new = np.sqrt(np.maximum(sq, 0.0) / (na + nb + nk))

        # slot a now holds the merged cluster; slot b is retired
        new = np.where(others, new, np.inf)
        dist[a] = new
        dist[:, a] = new
        dist[b, :] = np.inf
        dist[:, b] = np.inf
        active[b] = False
        ids[a] = n + step
        sizes[a] = na + nb

        row_min[b] = np.inf
        stale = others & ((row_arg == a) | (row_arg == b))
        improved = others & ~stale & (new < row_min)
        row_min[improved] = new[improved]
        row_arg[improved] = a
        for r in np.flatnonzero(stale):
            row_arg[r] = np.argmin(dist[r])
            row_min[r] = dist[r, row_arg[r]]
        if others.any():
            row_arg[a] = np.argmin(new)
            row_min[a] = new[row_arg[a]]
        else:
            row_min[a] = np.inf
    return Dendrogram(merges=merges, n_leaves=n, linkage=linkage.value)


def agglomerative(X, metric="euclidean", linkage="average") -> Dendrogram:
    metric, linkage = check_pairing(metric, linkage)
    X = check_matrix(X, min_samples=2)
    tree = linkage_tree(pairwise_distances(X, metric), linkage)
    return Dendrogram(tree.merges, tree.n_leaves, metric.value, linkage.value)


def cut_labels(dendrogram: Dendrogram, k: int) -> np.ndarray:
    """Labels after undoing the last ``k - 1`` merges.

    Clusters are numbered in order of their smallest leaf index.
    """
    n = dendrogram.n_leaves
    k = check_n_clusters(k, n, low=1)
    kept = n - k
    parent = np.arange(2 * n - 1)
    children = dendrogram.merges[:kept, :2].astype(np.int64)
    parent[children[:, 0]] = n + np.arange(kept)
    parent[children[:, 1]] = n + np.arange(kept)
    # pointer doubling up to the root of each kept subtree
    while True:
        nxt = parent[parent]
        if np.array_equal(nxt, parent):
            break
        parent = nxt
    roots = parent[:n]
    _, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first))
    return rank[inverse.ravel()]


def cut_dendrogram(dendrogram: Dendrogram, k: int) -> ClusteringResult:
    return ClusteringResult(
        labels=cut_labels(dendrogram, k),
        k=k,
        algorithm="agglomerative",
        metric=dendrogram.metric,
        linkage=dendrogram.linkage,
    )


class AgglomerativeClustering(ClusterMixin, BaseEstimator):
    """Bottom-up hierarchical clustering cut at ``n_clusters``.

    The full tree is kept in ``dendrogram_`` so other cuts are cheap via
    :func:`cut_labels`.
    """

    def __init__(self, n_clusters=2, metric="euclidean", linkage="average"):
        self.n_clusters = n_clusters
        self.metric = metric
        self.linkage = linkage

    def fit(self, X, y=None):
        X = check_matrix(X, min_samples=2)
        check_n_clusters(self.n_clusters, X.shape[0], low=1)
        self.dendrogram_ = agglomerative(X, self.metric, self.linkage)
        self.labels_ = cut_labels(self.dendrogram_, self.n_clusters)
        self.n_features_in_ = X.shape[1]
        return self
