"""Euclidean, Manhattan and cosine distances."""

from __future__ import annotations

from enum import Enum

import numpy as np

from .._validation import check_matrix

# rows per block when materialising pairwise differences
_BLOCK_ELEMENTS = 1 << 22
# Gram-form squared distances below this share of |a|^2 + |b|^2 are
# recomputed from differences; cancellation costs at most ~6 bits above it
_CANCELLATION_SHARE = 1.0 / 64


class Metric(str, Enum):
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"
    COSINE = "cosine"


def distance(a, b, metric="euclidean") -> float:
    """Distance between two vectors.

    Cosine distance uses ``0`` when both vectors are zero and ``1`` when
    exactly one is.
    """
    metric = Metric(metric)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"vectors must be 1-D with equal length, got {a.shape} and {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("vectors must be finite")
    if metric is Metric.EUCLIDEAN:
        return float(np.sqrt(np.sum((a - b) ** 2)))
    if metric is Metric.MANHATTAN:
        return float(np.sum(np.abs(a - b)))
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 and nb == 0:
        return 0.0
    if na == 0 or nb == 0:
        return 1.0
    return float(np.clip(1.0 - np.dot(a, b) / (na * nb), 0.0, 2.0))


def pairwise_distances(X, metric="euclidean") -> np.ndarray:
    """Symmetric ``N x N`` distance matrix with an exact zero diagonal."""
    metric = Metric(metric)
    X = check_matrix(X)
    n, d = X.shape
    if metric is Metric.COSINE:
        norms = np.linalg.norm(X, axis=1)
        zero = norms == 0
        U = X / np.where(zero, 1.0, norms)[:, None]
        out = np.clip(1.0 - U @ U.T, 0.0, 2.0)
        out[zero, :] = 1.0
        out[:, zero] = 1.0
        out[np.ix_(zero, zero)] = 0.0
    elif metric is Metric.EUCLIDEAN:
        out = _euclidean(X)
    else:
        out = np.zeros((n, n))
        block = max(1, _BLOCK_ELEMENTS // max(1, n * d))
        for start in range(0, n, block):
            out[start:start + block] = np.abs(X[start:start + block, None, :] - X[None, :, :]).sum(axis=2)
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 0.0)
    return out


def _euclidean(X: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", X, X)
    scale = sq[:, None] + sq[None, :]
    d2 = np.maximum(scale - 2.0 * (X @ X.T), 0.0)
    ii, jj = np.nonzero(np.triu(d2 < _CANCELLATION_SHARE * scale, k=1))
    step = max(1, _BLOCK_ELEMENTS // max(1, X.shape[1]))
    for start in range(0, ii.size, step):
        i, j = ii[start:start + step], jj[start:start + step]
        diff = X[i] - X[j]
        d2[i, j] = d2[j, i] = np.einsum("ij,ij->i", diff, diff)
    return np.sqrt(d2)
