"""Time x nodes matrices: alignment onto a fixed grid and standardization."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix
from .exceptions import DegenerateJobError

DEFAULT_GRID_LENGTH = 128


@dataclass(frozen=True)
class TimeNodeMatrix:
    """One job's samples of one KPI: rows are grid points, columns are nodes."""

    job_id: str
    kpi: str
    grid: np.ndarray
    values: np.ndarray
    node_ids: tuple
    zero_variance: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.zero_variance is None:
            object.__setattr__(
                self, "zero_variance", np.zeros(self.values.shape[1], dtype=bool)
            )

    @property
    def shape(self):
        return self.values.shape


def assemble_matrix(
    records: pd.DataFrame,
    n_points: int = DEFAULT_GRID_LENGTH,
    job_id: str | None = None,
    kpi: str | None = None,
) -> TimeNodeMatrix:
    """Resample one (job, KPI) record set onto ``n_points`` uniform time points.

    Each node's series is linearly interpolated over the job's time span.
    Outside a node's own sample range the nearest sample is held (no
    extrapolation).  Repeated timestamps within a node are averaged and
    nodes with fewer than two distinct timestamps are dropped.
    """
    if records.empty:
        raise DegenerateJobError(f"{job_id}/{kpi}: no records")
    if job_id is None:
        job_id = str(records["job_id"].iloc[0])
    return assemble_arrays(
        records["timestamp"].to_numpy(dtype=np.int64),
        records["node_id"].to_numpy(),
        records["value"].to_numpy(dtype=np.float64),
        n_points,
        job_id=job_id,
        kpi=kpi,
    )


def assemble_arrays(timestamps, node_ids, values, n_points=DEFAULT_GRID_LENGTH,
                    job_id=None, kpi=None) -> TimeNodeMatrix:
    """Array form of :func:`assemble_matrix`."""
    if n_points < 2:
        raise ValueError(f"grid length must be >= 2, got {n_points}")
    if len(timestamps) == 0:
        raise DegenerateJobError(f"{job_id}/{kpi}: no records")
    node_names, node_idx = np.unique(np.asarray(node_ids).astype(str), return_inverse=True)
    ts = np.asarray(timestamps, dtype=np.int64)
    vals = np.asarray(values, dtype=np.float64)
    order = np.lexsort((vals, ts, node_idx))
    node_idx, ts, vals = node_idx[order], ts[order], vals[order]
    # collapse repeated (node, timestamp) pairs to their mean
    new_key = np.ones(len(ts), dtype=bool)
    new_key[1:] = (node_idx[1:] != node_idx[:-1]) | (ts[1:] != ts[:-1])
    starts = np.flatnonzero(new_key)
    counts = np.diff(np.append(starts, len(ts)))
    node_idx, ts = node_idx[starts], ts[starts].astype(np.float64)
    vals = np.add.reduceat(vals, starts) / counts

    series = {}
    bounds = np.searchsorted(node_idx, np.arange(len(node_names) + 1))
    for i, name in enumerate(node_names):
        lo, hi = bounds[i], bounds[i + 1]
        if hi - lo >= 2:
            series[str(name)] = (ts[lo:hi], vals[lo:hi])
    if len(series) < 2:
        raise DegenerateJobError(
            f"{job_id}/{kpi}: {len(series)} usable node(s), need at least 2"
        )
    t_min = min(t[0] for t, _ in series.values())
    t_max = max(t[-1] for t, _ in series.values())
    if t_max <= t_min:
        raise DegenerateJobError(f"{job_id}/{kpi}: zero time span")

    times = np.linspace(t_min, t_max, n_points)
    grid_values = np.column_stack([np.interp(times, t, v) for t, v in series.values()])
    return TimeNodeMatrix(
        job_id=job_id,
        kpi=kpi,
        grid=np.linspace(0.0, 1.0, n_points),
        values=grid_values,
        node_ids=tuple(series),
    )


def standardize_columns(X, rtol=1e-12):
    """Return ``(Z, mean, scale, zero_variance)`` for a finite 2-D array."""
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    zero = (std == 0) | (std <= rtol * np.abs(mean))
    scale = np.where(zero, 1.0, std)
    Z = (X - mean) / scale
    Z[:, zero] = 0.0
    return Z, mean, scale, zero


class ColumnStandardizer(TransformerMixin, BaseEstimator):
    """Per-column zero mean, unit population variance.

    Columns whose standard deviation is zero (relative to their mean) are
    mapped to zeros and reported in ``zero_variance_``.

    Parameters
    ----------
    rtol : float
        A column counts as constant when ``std <= rtol * |mean|``.
    """

    def __init__(self, rtol=1e-12):
        self.rtol = rtol

    def fit(self, X, y=None):
        X = check_matrix(X, min_samples=1)
        _, self.mean_, self.scale_, self.zero_variance_ = standardize_columns(X, self.rtol)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_matrix(X, min_samples=1)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} columns, standardizer was fit on {self.n_features_in_}"
            )
        Z = (X - self.mean_) / self.scale_
        Z[:, self.zero_variance_] = 0.0
        return Z


def standardize(matrix: TimeNodeMatrix) -> TimeNodeMatrix:
    Z, _, _, zero = standardize_columns(matrix.values)
    return replace(matrix, values=Z, zero_variance=zero)
