"""Internal validation indices: silhouette, Calinski-Harabasz, Davies-Bouldin."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from ._validation import check_labels, check_matrix
from .cluster.distance import pairwise_distances
from .exceptions import UndefinedIndexError


class Index(str, Enum):
    SILHOUETTE = "silhouette"
    CALINSKI_HARABASZ = "calinski_harabasz"
    DAVIES_BOULDIN = "davies_bouldin"

    @property
    def maximize(self) -> bool:
        return self is not Index.DAVIES_BOULDIN


ALL_INDICES = (Index.CALINSKI_HARABASZ, Index.DAVIES_BOULDIN, Index.SILHOUETTE)


@dataclass(frozen=True)
class ValidationScore:
    index: Index
    value: float
    k: int
    ss_b: float | None = None
    ss_w: float | None = None


@dataclass(frozen=True)
class SilhouetteBreakdown:
    a: np.ndarray
    b: np.ndarray
    s: np.ndarray


@dataclass(frozen=True)
class ClusterGeometry:
    centroids: np.ndarray
    within_scatter: np.ndarray
    centroid_distances: np.ndarray
    sizes: np.ndarray
    grand_centroid: np.ndarray


def _checked(X, labels):
    X = check_matrix(X)
    codes, k = check_labels(labels, X.shape[0])
    n = X.shape[0]
    if not 2 <= k <= n - 1:
        raise UndefinedIndexError(f"index needs 2 <= K <= N-1, got K={k}, N={n}")
    return X, codes, k


def _geometry(X, codes, k) -> ClusterGeometry:
    n = X.shape[0]
    onehot = np.zeros((k, n))
    onehot[codes, np.arange(n)] = 1.0
    sizes = np.bincount(codes, minlength=k)
    centroids = (onehot @ X) / sizes[:, None]
    resid = X - centroids[codes]
    member_dist = np.sqrt(np.einsum("ij,ij->i", resid, resid))
    scatter = np.bincount(codes, weights=member_dist, minlength=k) / sizes
    return ClusterGeometry(
        centroids=centroids,
        within_scatter=scatter,
        centroid_distances=pairwise_distances(centroids, "euclidean"),
        sizes=sizes,
        grand_centroid=X.mean(axis=0),
    )


def cluster_geometry(X, labels) -> ClusterGeometry:
    X = check_matrix(X)
    codes, k = check_labels(labels, X.shape[0])
    return _geometry(X, codes, k)


def _silhouette(D, codes, k):
    n = D.shape[0]
    if D.shape != (n, n) or codes.shape[0] != n:
        raise ValueError(f"distance matrix must be {codes.shape[0]}x{codes.shape[0]}")
    onehot = np.zeros((n, k))
    onehot[np.arange(n), codes] = 1.0
    sizes = onehot.sum(axis=0)
    sums = D @ onehot
    rows = np.arange(n)
    own = sizes[codes]
    a = np.where(own > 1, sums[rows, codes] / np.maximum(own - 1, 1), 0.0)
    mean_other = sums / sizes
    mean_other[rows, codes] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where((own > 1) & (denom > 0), (b - a) / denom, 0.0)
    return float(s.mean()), SilhouetteBreakdown(a=a, b=b, s=s)


def silhouette(X, labels, metric="euclidean", distances=None):
    """Mean silhouette and per-point ``a``, ``b``, ``s``.

    ``distances`` may carry a precomputed pairwise matrix for ``metric``.
    Members of singleton clusters, and points with ``a = b = 0``, score 0.
    """
    X, codes, k = _checked(X, labels)
    D = pairwise_distances(X, metric) if distances is None else np.asarray(distances)
    return _silhouette(D, codes, k)


def silhouette_score(X, labels, metric="euclidean", distances=None) -> ValidationScore:
    value, _ = silhouette(X, labels, metric, distances)
    return ValidationScore(Index.SILHOUETTE, value, int(len(np.unique(labels))))


def _calinski_harabasz(X, codes, k, geo) -> ValidationScore:
    n = X.shape[0]
    diff = geo.centroids - geo.grand_centroid
    ss_b = float(np.sum(geo.sizes * np.einsum("ij,ij->i", diff, diff)))
    resid = X - geo.centroids[codes]
    ss_w = float(np.einsum("ij,ij->", resid, resid))
    value = math.inf if ss_w == 0 else ss_b / ss_w * (n - k) / (k - 1)
    return ValidationScore(Index.CALINSKI_HARABASZ, value, k, ss_b=ss_b, ss_w=ss_w)


def calinski_harabasz(X, labels) -> ValidationScore:
    """Variance-ratio criterion on squared Euclidean scatter.

    Perfectly compact clusters (zero within-cluster scatter) give ``inf``.
    """
    X, codes, k = _checked(X, labels)
    return _calinski_harabasz(X, codes, k, _geometry(X, codes, k))


def _davies_bouldin(k, geo) -> ValidationScore:
    d = geo.centroid_distances
    off = ~np.eye(k, dtype=bool)
    if np.any(d[off] == 0):
        raise UndefinedIndexError("two cluster centroids coincide")
    S = geo.within_scatter
    ratio = np.where(off, (S[:, None] + S[None, :]) / np.where(off, d, 1.0), -np.inf)
    return ValidationScore(Index.DAVIES_BOULDIN, float(ratio.max(axis=1).mean()), k)


def davies_bouldin(X, labels) -> ValidationScore:
    """Mean over clusters of the worst (S_k + S_l) / d(u_k, u_l) ratio."""
    X, codes, k = _checked(X, labels)
    return _davies_bouldin(k, _geometry(X, codes, k))


def score_partition(X, labels, metric="euclidean", distances=None) -> dict:
    """All three indices for one partition; undefined values become ``None``.

    Input checks and cluster geometry are shared across the indices.
    """
    try:
        X, codes, k = _checked(X, labels)
    except UndefinedIndexError:
        return dict.fromkeys(ALL_INDICES)
    D = pairwise_distances(X, metric) if distances is None else np.asarray(distances)
    geo = _geometry(X, codes, k)
    out = {
        Index.SILHOUETTE: _silhouette(D, codes, k)[0],
        Index.CALINSKI_HARABASZ: _calinski_harabasz(X, codes, k, geo).value,
    }
    try:
        out[Index.DAVIES_BOULDIN] = _davies_bouldin(k, geo).value
    except UndefinedIndexError:
        out[Index.DAVIES_BOULDIN] = None
    return out


def _value(score):
    if score is None:
        return None
    value = score.value if isinstance(score, ValidationScore) else float(score)
    return None if math.isnan(value) else value


def better(a: float, b: float, index) -> bool:
    """True when ``a`` is strictly better than ``b`` under ``index``."""
    return a > b if Index(index).maximize else a < b


def select_optimal_k(scores: Mapping[int, object], index) -> tuple[int, float]:
    """Best K for one index; missing scores are skipped and ties go to the smaller K.

    ``scores`` maps K to a :class:`ValidationScore`, a float or ``None``.
    """
    index = Index(index)
    best_k, best = None, None
    for k in sorted(scores):
        value = _value(scores[k])
        if value is None:
            continue
        if best is None or better(value, best, index):
            best_k, best = k, value
    if best_k is None:
        raise UndefinedIndexError(f"no defined {index.value} score to select from")
    return best_k, best
