"""Lloyd's k-means with k-means++ seeding and several restarts."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_matrix, check_n_clusters
from .result import ClusteringResult


def _sq_dists(X, x_sq, C):
    d = x_sq[:, None] - 2.0 * (X @ C.T) + np.einsum("ij,ij->i", C, C)[None, :]
    return np.maximum(d, 0.0)


def kmeans_plusplus(X, n_clusters, rng, x_sq=None):
    """Pick initial centers by D^2 sampling.  Returns the chosen row indices."""
    n = X.shape[0]
    x_sq = np.einsum("ij,ij->i", X, X) if x_sq is None else x_sq
    idx = [int(rng.integers(n))]
    closest = _sq_dists(X, x_sq, X[idx])[:, 0]
    for _ in range(1, n_clusters):
        total = closest.sum()
        if total > 0:
            cdf = np.cumsum(closest)
            pick = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
            pick = min(pick, n - 1)
        else:
            # every point sits on a chosen center; fall back to uniform
            pick = int(rng.integers(n))
        idx.append(pick)
        closest = np.minimum(closest, _sq_dists(X, x_sq, X[[pick]])[:, 0])
    return np.asarray(idx)


def _centers_from_labels(X, labels, k):
    onehot = np.zeros((k, X.shape[0]))
    onehot[labels, np.arange(X.shape[0])] = 1.0
    counts = np.bincount(labels, minlength=k)
    return (onehot @ X) / np.maximum(counts, 1)[:, None], counts


def _cluster_ss(X, C, labels):
    r = X - C[labels]
    return np.bincount(labels, weights=np.einsum("ij,ij->i", r, r), minlength=C.shape[0])


def _inertia(X, C, labels):
    # summed per cluster so a per-cluster decrease can never raise the total
    return float(np.sum(_cluster_ss(X, C, labels)))


def _repair_empty(X, C, labels, counts):
    """Move the point farthest from its centroid into each empty cluster."""
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return labels, C
    labels = labels.copy()
    C = C.copy()
    far = np.einsum("ij,ij->i", X - C[labels], X - C[labels])
    for e in empty:
        movable = counts[labels] > 1
        cand = np.flatnonzero(movable)
        # stable: largest distance, then smallest index
        j = cand[np.argmax(far[cand])]
        counts[labels[j]] -= 1
        labels[j] = e
        counts[e] = 1
        C[e] = X[j]
        far[j] = 0.0
    return labels, C


def lloyd(X, centers, max_iter=300, tol=1e-6, x_sq=None):
    """Run Lloyd iterations from ``centers``.

    Returns labels, centers, final inertia, per-iteration inertia and the
    iteration count.
    The inertia recorded at each iteration is computed after assignment
    (and empty-cluster repair) and never increases.
    """
    x_sq = np.einsum("ij,ij->i", X, X) if x_sq is None else x_sq
    k = centers.shape[0]
    C = centers.copy()
    history = []
    labels = None
    for it in range(1, max_iter + 1):
        new_labels = np.argmin(_sq_dists(X, x_sq, C), axis=1)
        counts = np.bincount(new_labels, minlength=k)
        new_labels, C = _repair_empty(X, C, new_labels, counts)
        inertia = _inertia(X, C, new_labels)
        if history and inertia > history[-1]:
            # a rounding-level tie flipped assignments; keep the previous ones
            new_labels = labels
            inertia = _inertia(X, C, new_labels)
        history.append(inertia)
        stable = labels is not None and np.array_equal(new_labels, labels)
        labels = new_labels
        new_C, _ = _centers_from_labels(X, labels, k)
        # a rounded mean can sit an ulp off the minimiser; keep the better center
        worse = _cluster_ss(X, new_C, labels) > _cluster_ss(X, C, labels)
        new_C[worse] = C[worse]
        shift = np.sqrt(np.max(np.einsum("ij,ij->i", new_C - C, new_C - C)))
        C = new_C
        if stable or shift < tol:
            break
    final = _inertia(X, C, labels)
    history.append(final)
    return labels, C, final, history, it


class KMeans(ClusterMixin, BaseEstimator):
    """K-means (Euclidean) with k-means++ initialization.

    Parameters
    ----------
    n_clusters : int
    n_init : int
        Independent restarts; the run with the lowest inertia is kept.
    max_iter : int
    tol : float
        Stop when no centroid moves further than ``tol``.
    random_state : int or None
    """

    def __init__(self, n_clusters=8, n_init=10, max_iter=300, tol=1e-6, random_state=None):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_matrix(X)
        k = check_n_clusters(self.n_clusters, X.shape[0], low=1)
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")
        rng = np.random.default_rng(self.random_state)
        x_sq = np.einsum("ij,ij->i", X, X)
        best = None
        self.inertia_histories_ = []
        for _ in range(self.n_init):
            seeds = kmeans_plusplus(X, k, rng, x_sq)
            labels, C, inertia, hist, n_iter = lloyd(
                X, X[seeds], self.max_iter, self.tol, x_sq
            )
            self.inertia_histories_.append(hist)
            if best is None or inertia < best[2]:
                best = (labels, C, inertia, n_iter)
        self.labels_, self.cluster_centers_, self.inertia_, self.n_iter_ = best
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = check_matrix(X)
        x_sq = np.einsum("ij,ij->i", X, X)
        return np.argmin(_sq_dists(X, x_sq, self.cluster_centers_), axis=1)


def kmeans(X, k, seed=None, restarts=10, max_iter=300, tol=1e-6) -> ClusteringResult:
    X = check_matrix(X)
    check_n_clusters(k, X.shape[0], low=2)
    est = KMeans(k, n_init=restarts, max_iter=max_iter, tol=tol, random_state=seed).fit(X)
    return ClusteringResult(
        labels=est.labels_,
        k=k,
        algorithm="kmeans",
        metric="euclidean",
        linkage=None,
        seed=seed,
        inertia=est.inertia_,
    )
