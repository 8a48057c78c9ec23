"""Input validation helpers built on :func:`sklearn.utils.check_array`."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import ConfigurationError


def check_matrix(X, min_samples=1, min_features=1):
    """Return ``X`` as a finite float64 2-D array."""
    return check_array(
        X,
        dtype=np.float64,
        ensure_2d=True,
        ensure_all_finite=True,
        ensure_min_samples=min_samples,
        ensure_min_features=min_features,
        copy=False,
    )


def check_labels(labels, n_samples):
    """Return ``(codes, K)`` with codes in ``[0, K)`` in first-appearance order."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != n_samples:
        raise ValueError(
            f"labels must be a vector of length {n_samples}, got shape {labels.shape}"
        )
    _, first, codes = np.unique(labels, return_index=True, return_inverse=True)
    # renumber so cluster ids follow first appearance; keeps results label-order free
    order = np.argsort(np.argsort(first))
    return order[codes.ravel()], len(first)


def check_n_clusters(k, n_samples, low=1, high=None, name="n_clusters"):
    high = n_samples if high is None else high
    if not isinstance(k, numbers.Integral) or isinstance(k, bool):
        raise ConfigurationError(f"{name} must be an integer, got {k!r}")
    if not low <= k <= high:
        raise ConfigurationError(f"{name}={k} outside [{low}, {high}]")
    return int(k)
