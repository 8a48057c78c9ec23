"""From raw records to per-job PCA results and feature matrices."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .catalog import KpiId
from .exceptions import DegenerateJobError
from .ingest import FilterReport, JobRegistry, build_job_registry, filter_jobs
from .preprocess import DEFAULT_GRID_LENGTH, assemble_arrays, standardize
from .reduce import PcaResult, feature_matrix, flatten_job, pca2

logger = logging.getLogger(__name__)


@dataclass
class PreparedDataset:
    """Eligible jobs with one :class:`PcaResult` per catalog KPI."""

    catalog: tuple
    job_ids: tuple
    pca: dict
    n_points: int
    report: FilterReport | None = None
    registry: JobRegistry | None = None
    degenerate: dict = field(default_factory=dict)

    @property
    def kpi_names(self) -> tuple:
        return tuple(k.name for k in self.catalog)

    def features(self, selection: Sequence[str] | None = None) -> np.ndarray:
        """Rows of flattened PC scores in ``job_ids`` order."""
        selection = self.kpi_names if selection is None else tuple(selection)
        return feature_matrix([flatten_job(self.pca[j], selection) for j in self.job_ids])

    def results(self) -> list[PcaResult]:
        return [r for j in self.job_ids for r in self.pca[j].values()]

    def subset(self, kpis: Sequence[str]) -> "PreparedDataset":
        by_name = {k.name: k for k in self.catalog}
        catalog = tuple(by_name[n] for n in kpis)
        return PreparedDataset(
            catalog=catalog,
            job_ids=self.job_ids,
            pca={j: {n: self.pca[j][n] for n in kpis} for j in self.job_ids},
            n_points=self.n_points,
            report=self.report,
            registry=self.registry,
            degenerate=self.degenerate,
        )


def split_by_job(frame: pd.DataFrame, jobs) -> dict:
    """Map job id to its (timestamps, node ids, values) arrays."""
    if frame.empty:
        return {}
    wanted = frame[frame["job_id"].isin(jobs)]
    job_col = wanted["job_id"].to_numpy().astype(str)
    order = np.argsort(job_col, kind="stable")
    job_col = job_col[order]
    ts = wanted["timestamp"].to_numpy(dtype=np.int64)[order]
    nodes = wanted["node_id"].to_numpy()[order]
    vals = wanted["value"].to_numpy(dtype=np.float64)[order]
    uniq, starts = np.unique(job_col, return_index=True)
    ends = np.append(starts[1:], len(job_col))
    return {
        str(job): (ts[a:b], nodes[a:b], vals[a:b]) for job, a, b in zip(uniq, starts, ends)
    }


def prepare_dataset(
    records_per_kpi: Mapping[str, pd.DataFrame],
    operational_flags: Mapping[str, bool],
    catalog: Sequence[KpiId],
    n_points: int = DEFAULT_GRID_LENGTH,
) -> PreparedDataset:
    """Filter jobs, then assemble, standardize and reduce every (job, KPI) pair.

    Jobs whose matrix turns out degenerate for any KPI (fewer than two
    nodes with two samples, zero time span) are left out and listed in
    ``degenerate``.
    """
    catalog = tuple(catalog)
    registry = build_job_registry(records_per_kpi, operational_flags)
    report = filter_jobs(registry, catalog)
    eligible = set(report.eligible_ids)
    pca: dict[str, dict] = {job: {} for job in report.eligible_ids}
    degenerate: dict[str, str] = {}
    for kpi in catalog:
        per_job = split_by_job(records_per_kpi[kpi.name], eligible)
        for job in report.eligible_ids:
            if job in degenerate:
                continue
            try:
                matrix = assemble_arrays(*per_job[job], n_points, job_id=job, kpi=kpi.name)
            except DegenerateJobError as exc:
                logger.warning("excluding job: %s", exc)
                degenerate[job] = str(exc)
                continue
            pca[job][kpi.name] = pca2(standardize(matrix))
    job_ids = tuple(j for j in report.eligible_ids if j not in degenerate)
    return PreparedDataset(
        catalog=catalog,
        job_ids=job_ids,
        pca={j: pca[j] for j in job_ids},
        n_points=n_points,
        report=report,
        registry=registry,
        degenerate=degenerate,
    )
