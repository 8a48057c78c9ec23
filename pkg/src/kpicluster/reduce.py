"""Two-component PCA per (job, KPI) matrix and flattening into feature rows."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix
from .preprocess import TimeNodeMatrix

RETAINED_BUCKETS = (">=95", "90-95", "85-90", "80-85", "75-80", "<75")
_BUCKET_EDGES = (0.95, 0.90, 0.85, 0.80, 0.75)


def covariance_pca(X, n_components=2, symmetry_tol=1e-8):
    """Eigendecomposition of ``X.T @ X / n``.

    Returns ``(components, eigenvalues, retained)``.  An all-zero input has
    nothing to lose and reports ``retained = 1``.
    """
    if not np.all(np.isfinite(X)):
        raise ValueError("PCA input must be finite")
    n, m = X.shape
    if m < n_components:
        raise ValueError(f"need at least {n_components} columns, got {m}")
    cov = X.T @ X / n
    asym = np.max(np.abs(cov - cov.T), initial=0.0)
    if asym > symmetry_tol * max(1.0, np.max(np.abs(cov))):
        raise RuntimeError(f"covariance not symmetric (max asymmetry {asym:g})")
    cov = 0.5 * (cov + cov.T)
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals[::-1], 0.0, None)
    evecs = evecs[:, ::-1][:, :n_components].copy()
    pivots = np.argmax(np.abs(evecs), axis=0)
    signs = np.sign(evecs[pivots, np.arange(n_components)])
    signs[signs == 0] = 1.0
    evecs *= signs
    total = evals.sum()
    retained = min(float(evals[:n_components].sum() / total), 1.0) if total > 0 else 1.0
    return evecs, evals, retained


class FixedPCA(TransformerMixin, BaseEstimator):
    """PCA with a fixed number of components from the population covariance.

    The input is expected to be column-centered already; ``X.T @ X / n``
    is decomposed as is.  Each component is oriented so that its
    largest-magnitude loading is positive (first index wins ties), which
    makes the scores deterministic.

    Attributes
    ----------
    components_ : ndarray of shape (n_features, n_components)
    eigenvalues_ : ndarray of shape (n_features,)
        All covariance eigenvalues, descending, clipped at zero.
    retained_ : float
        Share of total variance carried by the kept components.
    """

    def __init__(self, n_components=2, symmetry_tol=1e-8):
        self.n_components = n_components
        self.symmetry_tol = symmetry_tol

    def fit(self, X, y=None):
        X = check_matrix(X, min_samples=2, min_features=self.n_components)
        self.components_, self.eigenvalues_, self.retained_ = covariance_pca(
            X, self.n_components, self.symmetry_tol
        )
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_matrix(X, min_samples=1)
        return X @ self.components_


@dataclass(frozen=True)
class PcaResult:
    job_id: str
    kpi: str
    scores: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    retained: float


def pca2(matrix: TimeNodeMatrix) -> PcaResult:
    """Fixed two-component PCA of a standardized time x nodes matrix."""
    X = np.asarray(matrix.values, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError(f"need a T x M matrix with T >= 2, got shape {X.shape}")
    components, eigenvalues, retained = covariance_pca(X, 2)
    return PcaResult(
        job_id=matrix.job_id,
        kpi=matrix.kpi,
        scores=X @ components,
        components=components,
        eigenvalues=eigenvalues,
        retained=retained,
    )


def retained_bucket(value: float) -> str:
    for edge, label in zip(_BUCKET_EDGES, RETAINED_BUCKETS):
        if value >= edge:
            return label
    return RETAINED_BUCKETS[-1]


def job_retained(results: Sequence[PcaResult]) -> dict[str, float]:
    """Mean retained share per job over all its KPI results."""
    per_job = defaultdict(list)
    for r in results:
        per_job[r.job_id].append(r.retained)
    return {job: float(np.mean(v)) for job, v in sorted(per_job.items())}


def retained_info_table(results: Sequence[PcaResult]) -> dict[str, int]:
    table = dict.fromkeys(RETAINED_BUCKETS, 0)
    for value in job_retained(results).values():
        table[retained_bucket(value)] += 1
    return table


@dataclass(frozen=True)
class FeatureVector:
    job_id: str
    kpis: tuple
    data: np.ndarray


def flatten_job(results: Mapping[str, PcaResult], selection: Sequence[str]) -> FeatureVector:
    """Concatenate PC1 then PC2 series for each selected KPI, in selection order."""
    if not selection:
        raise ValueError("selection must name at least one KPI")
    missing = [k for k in selection if k not in results]
    if missing:
        raise KeyError(f"no PCA result for KPI(s): {', '.join(missing)}")
    lengths = {results[k].scores.shape[0] for k in selection}
    if len(lengths) != 1:
        raise ValueError(f"PCA score series have mismatched lengths: {sorted(lengths)}")
    job_ids = {results[k].job_id for k in selection}
    data = np.concatenate([results[k].scores.T.ravel() for k in selection])
    return FeatureVector(job_id=job_ids.pop() if len(job_ids) == 1 else None,
                         kpis=tuple(selection), data=data)


def feature_matrix(vectors: Sequence[FeatureVector]) -> np.ndarray:
    lengths = {len(v.data) for v in vectors}
    if len(lengths) > 1:
        raise ValueError("feature vectors have different lengths")
    return np.vstack([v.data for v in vectors])
