"""Parsing of per-KPI record files, the job registry and job filtering.

Each KPI is stored as one CSV file named ``<kpi name>.csv`` with the header
``timestamp,job_id,node_id,value``.  Records are held in memory as a
:class:`pandas.DataFrame` with exactly those four columns.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .catalog import KpiId
from .exceptions import ConfigurationError, FormatError

logger = logging.getLogger(__name__)

RECORD_COLUMNS = ("timestamp", "job_id", "node_id", "value")
HISTOGRAM_BUCKETS = ("2-5", "6-10", "11-15", "16-20", ">20")


class KpiRecord(NamedTuple):
    timestamp: int
    job_id: str
    node_id: str
    value: float


def empty_records() -> pd.DataFrame:
    return pd.DataFrame(
        {
            "timestamp": pd.Series([], dtype="int64"),
            "job_id": pd.Series([], dtype=object),
            "node_id": pd.Series([], dtype=object),
            "value": pd.Series([], dtype="float64"),
        }
    )


def records_frame(records: Iterable) -> pd.DataFrame:
    """Build a record frame from ``KpiRecord``-like 4-tuples."""
    rows = list(records)
    if not rows:
        return empty_records()
    frame = pd.DataFrame(rows, columns=list(RECORD_COLUMNS))
    frame["timestamp"] = frame["timestamp"].astype("int64")
    frame["job_id"] = frame["job_id"].astype(str).astype(object)
    frame["node_id"] = frame["node_id"].astype(str).astype(object)
    frame["value"] = frame["value"].astype("float64")
    return frame


def _parse_row(row):
    if len(row) != 4:
        return None
    ts, job, node, value = (c.strip() for c in row)
    if not job or not node:
        return None
    try:
        ts = int(ts)
        value = float(value)
    except ValueError:
        return None
    if ts < 0 or not math.isfinite(value):
        return None
    return KpiRecord(ts, job, node, value)


def parse_kpi_records(stream, kpi: KpiId | None = None) -> tuple[pd.DataFrame, int]:
    """Parse one KPI's CSV stream.

    Parameters
    ----------
    stream : binary or text file-like object, or a path
    kpi : KpiId, optional
        Only used for log messages.

    Returns
    -------
    records : DataFrame
        One row per well-formed data row.
    n_skipped : int
        Rows dropped because a field was malformed or the value non-finite.
    """
    if isinstance(stream, (str, Path)):
        with open(stream, "rb") as fh:
            return parse_kpi_records(fh, kpi)
    try:
        raw = stream.read()
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot read KPI stream: {exc}") from exc
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"KPI stream is not UTF-8: {exc}") from exc

    reader = csv.reader(io.StringIO(raw))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != RECORD_COLUMNS:
        raise FormatError(
            f"expected header {','.join(RECORD_COLUMNS)!r}, got {header!r}"
        )
    good = []
    skipped = 0
    for row in reader:
        if not row:
            continue
        rec = _parse_row(row)
        if rec is None:
            skipped += 1
        else:
            good.append(rec)
    if skipped:
        logger.info("%s: skipped %d malformed rows", kpi.name if kpi else "kpi", skipped)
    return records_frame(good), skipped


def load_kpi_directory(kpi_dir, catalog, n_jobs: int = 1) -> tuple[dict, dict]:
    """Parse ``<kpi_dir>/<name>.csv`` for every catalog KPI.

    Returns the record frames and the per-KPI skip counts, both keyed by KPI name.
    """
    kpi_dir = Path(kpi_dir)
    paths = [kpi_dir / f"{kpi.name}.csv" for kpi in catalog]
    for p in paths:
        if not p.is_file():
            raise FileNotFoundError(f"missing KPI file: {p}")
    parsed = Parallel(n_jobs=n_jobs)(
        delayed(parse_kpi_records)(p, kpi) for p, kpi in zip(paths, catalog)
    )
    frames = {kpi.name: frame for kpi, (frame, _) in zip(catalog, parsed)}
    skipped = {kpi.name: n for kpi, (_, n) in zip(catalog, parsed)}
    return frames, skipped


def write_kpi_records(frame: pd.DataFrame, path) -> None:
    frame = frame.loc[:, list(RECORD_COLUMNS)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for ts, job, node, value in frame.itertuples(index=False):
            w.writerow((int(ts), job, node, repr(float(value))))


def read_operational_flags(path) -> dict[str, bool]:
    """Read a ``job_id,operational`` CSV with ``true``/``false`` values."""
    flags = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["job_id", "operational"]:
            raise FormatError(f"expected header 'job_id,operational', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{path}:{lineno}: expected 2 fields")
            value = row[1].strip().lower()
            if value not in ("true", "false"):
                raise FormatError(f"{path}:{lineno}: operational must be true/false")
            flags[row[0].strip()] = value == "true"
    return flags


def write_operational_flags(flags: Mapping[str, bool], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["job_id", "operational"])
        for job in sorted(flags):
            w.writerow([job, "true" if flags[job] else "false"])


@dataclass(frozen=True)
class JobInfo:
    operational: bool
    nodes_per_kpi: dict = field(default_factory=dict)
    time_span_per_kpi: dict = field(default_factory=dict)

    def node_count(self) -> int:
        return max((len(n) for n in self.nodes_per_kpi.values()), default=0)


@dataclass(frozen=True)
class JobRegistry:
    jobs: dict

    def __len__(self) -> int:
        return len(self.jobs)

    def __contains__(self, job_id) -> bool:
        return job_id in self.jobs


def build_job_registry(
    records_per_kpi: Mapping[str, pd.DataFrame], operational_flags: Mapping[str, bool]
) -> JobRegistry:
    """Aggregate node sets and time spans per (job, KPI).

    Jobs missing from ``operational_flags`` are treated as operational.
    """
    nodes: dict[str, dict] = {}
    spans: dict[str, dict] = {}
    for name in sorted(records_per_kpi):
        frame = records_per_kpi[name]
        if frame.empty:
            continue
        grouped = frame.groupby("job_id", sort=True)
        node_sets = grouped["node_id"].agg(frozenset)
        ts = grouped["timestamp"].agg(["min", "max"])
        for job, ns in node_sets.items():
            nodes.setdefault(job, {})[name] = ns
            spans.setdefault(job, {})[name] = (int(ts.at[job, "min"]), int(ts.at[job, "max"]))
    jobs = {}
    for job in sorted(nodes):
        jobs[job] = JobInfo(
            operational=bool(operational_flags.get(job, True)),
            nodes_per_kpi=nodes[job],
            time_span_per_kpi=spans[job],
        )
    return JobRegistry(jobs)


@dataclass(frozen=True)
class FilterReport:
    total_jobs: int
    excluded_missing_kpis: int
    excluded_single_node: int
    operational: int
    non_operational_eligible: int
    eligible_ids: tuple

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eligible_ids"] = list(self.eligible_ids)
        return d


def filter_jobs(registry: JobRegistry, catalog) -> FilterReport:
    """Apply the exclusion rules in priority order.

    A job is eligible when it appears in every catalog KPI, has at least two
    nodes in each of them and is not operational.  Each excluded job is
    counted once, under the first failing rule (missing KPIs, then single
    node, then operational).
    """
    names = [k.name if isinstance(k, KpiId) else str(k) for k in catalog]
    if not names:
        raise ConfigurationError("catalog must contain at least one KPI")
    missing = single = operational = 0
    eligible = []
    for job, info in registry.jobs.items():
        if any(n not in info.nodes_per_kpi for n in names):
            missing += 1
        elif any(len(info.nodes_per_kpi[n]) < 2 for n in names):
            single += 1
        elif info.operational:
            operational += 1
        else:
            eligible.append(job)
    eligible.sort()
    return FilterReport(
        total_jobs=len(registry),
        excluded_missing_kpis=missing,
        excluded_single_node=single,
        operational=operational,
        non_operational_eligible=len(eligible),
        eligible_ids=tuple(eligible),
    )


def node_bucket(count: int) -> str:
    if count < 2:
        raise ValueError(f"eligible jobs have at least 2 nodes, got {count}")
    if count <= 5:
        return "2-5"
    if count <= 10:
        return "6-10"
    if count <= 15:
        return "11-15"
    if count <= 20:
        return "16-20"
    return ">20"


def node_count_histogram(report: FilterReport, registry: JobRegistry) -> dict[str, int]:
    """Count eligible jobs per node-count bucket (max node count over KPIs)."""
    hist = dict.fromkeys(HISTOGRAM_BUCKETS, 0)
    for job in report.eligible_ids:
        hist[node_bucket(registry.jobs[job].node_count())] += 1
    return hist


def write_filter_report(report: FilterReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n")


def read_filter_report(path) -> FilterReport:
    d = json.loads(Path(path).read_text())
    d["eligible_ids"] = tuple(d["eligible_ids"])
    return FilterReport(**d)


def write_histogram(hist: Mapping[str, int], path, label: str = "node_range") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([label, "jobs"])
        for bucket, count in hist.items():
            w.writerow([bucket, count])
        w.writerow(["total", int(np.sum(list(hist.values())))])
