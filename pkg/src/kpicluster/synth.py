"""Synthetic monitoring datasets with planted job groups.

Every group owns a distinct waveform per signal KPI (a group-specific
sinusoid frequency plus a burst at a group-specific position).  A job
replays its group's waveform on each of its nodes with a small phase
jitter and Gaussian noise.  Non-signal KPIs are flat baselines plus noise,
identical in distribution for all groups.

Jobs that the ingest filters must drop (operational, single-node, missing a
KPI) can be injected in exact numbers, which makes bookkeeping tables
reproducible.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .catalog import DEFAULT_CATALOG, KpiId, save_catalog
from .exceptions import ConfigurationError
from .ingest import HISTOGRAM_BUCKETS, write_kpi_records, write_operational_flags

REFERENCE_NODE_COUNTS = {"2-5": 195, "6-10": 49, "11-15": 15, "16-20": 13, ">20": 30}
_BUCKET_RANGES = {"2-5": (2, 5), "6-10": (6, 10), "11-15": (11, 15), "16-20": (16, 20)}


@dataclass
class SynthSpec:
    """Parameters of a synthetic dataset.

    ``n_jobs`` counts every job; the non-operational multi-node jobs with
    all KPIs are what is left after the injected ``n_operational``,
    ``n_missing_kpi`` and ``n_single_node`` jobs.

    ``node_distribution`` maps node-count buckets to weights.  Weights are
    turned into exact bucket counts (largest remainder), so passing integer
    counts that sum to the eligible total reproduces them exactly.
    PC scores grow with the square root of the node count, so a wide spread
    of node counts splits planted groups; the default keeps every job in
    the smallest bucket.
    """

    n_jobs: int = 300
    group_count: int = 3
    group_proportions: Sequence[float] | None = None
    node_distribution: Mapping[str, float] = field(default_factory=lambda: {"2-5": 1.0})
    max_nodes: int = 30
    node_pool: int = 74
    kpis: Sequence[KpiId] = DEFAULT_CATALOG
    signal_kpis: Sequence[str] | None = None
    duration_range: tuple[int, int] = (1800, 7200)
    sample_interval: int = 60
    noise_sigma: float = 0.1
    phase_jitter: float = 0.005
    n_operational: int = 0
    n_missing_kpi: int = 0
    n_single_node: int = 0
    seed: int = 0

    def __post_init__(self):
        self.kpis = tuple(self.kpis)
        names = [k.name for k in self.kpis]
        if self.signal_kpis is None:
            self.signal_kpis = tuple(names)
        self.signal_kpis = tuple(self.signal_kpis)

    @property
    def n_eligible(self) -> int:
        return self.n_jobs - self.n_operational - self.n_missing_kpi - self.n_single_node

    def proportions(self) -> np.ndarray:
        if self.group_proportions is None:
            return np.full(self.group_count, 1.0 / self.group_count)
        return np.asarray(self.group_proportions, dtype=np.float64)

    def validate(self) -> None:
        if self.group_count < 1:
            raise ConfigurationError("group_count must be >= 1")
        p = self.proportions()
        if p.shape != (self.group_count,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
            raise ConfigurationError("group_proportions must be G non-negative weights summing to 1")
        if min(self.n_operational, self.n_missing_kpi, self.n_single_node) < 0:
            raise ConfigurationError("injected job counts must be non-negative")
        if self.n_eligible < 0:
            raise ConfigurationError(
                "n_operational + n_missing_kpi + n_single_node exceeds n_jobs"
            )
        names = {k.name for k in self.kpis}
        if not self.kpis:
            raise ConfigurationError("at least one KPI is required")
        if not set(self.signal_kpis) <= names:
            raise ConfigurationError("signal_kpis must be a subset of kpis")
        if self.n_missing_kpi and len(self.kpis) < 2:
            raise ConfigurationError("missing-KPI jobs need at least 2 KPIs")
        unknown = set(self.node_distribution) - set(HISTOGRAM_BUCKETS)
        if unknown:
            raise ConfigurationError(f"unknown node buckets: {sorted(unknown)}")
        if sum(self.node_distribution.values()) <= 0:
            raise ConfigurationError("node_distribution needs a positive weight")
        if self.max_nodes < 21 and self.node_distribution.get(">20", 0):
            raise ConfigurationError("max_nodes must be > 20 when the >20 bucket is used")
        if self.node_pool < max(self.max_nodes, 20):
            raise ConfigurationError("node_pool must cover max_nodes")
        lo, hi = self.duration_range
        if not 0 < lo <= hi or self.sample_interval <= 0 or lo < self.sample_interval:
            raise ConfigurationError("duration_range must allow at least 2 samples")
        if self.noise_sigma < 0 or self.phase_jitter < 0:
            raise ConfigurationError("noise_sigma and phase_jitter must be >= 0")


@dataclass
class SynthDataset:
    records: dict
    flags: dict
    ground_truth: dict
    catalog: tuple


def _largest_remainder(weights, total):
    w = np.asarray(weights, dtype=np.float64)
    raw = w / w.sum() * total
    counts = np.floor(raw).astype(int)
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[: total - counts.sum()]] += 1
    return counts


def _burst(u, center, width=0.04):
    return np.exp(-0.5 * ((u - center) / width) ** 2)


def group_waveform(group: int, group_count: int, kpi_index: int, u) -> np.ndarray:
    """Noise-free shape of one group's signal for one KPI on normalized time ``u``."""
    freq = group + 1
    phase = 0.7 * kpi_index
    center = (group + 0.5) / group_count
    return np.sin(2 * np.pi * freq * u + phase) + 1.5 * _burst(u, center)


def _node_counts(spec, rng):
    buckets = [b for b in HISTOGRAM_BUCKETS if spec.node_distribution.get(b, 0) > 0]
    counts = _largest_remainder([spec.node_distribution[b] for b in buckets], spec.n_eligible)
    nodes = []
    for bucket, c in zip(buckets, counts):
        lo, hi = _BUCKET_RANGES.get(bucket, (21, spec.max_nodes))
        nodes.extend(rng.integers(lo, hi + 1, size=c).tolist())
    nodes = np.asarray(nodes, dtype=int)
    rng.shuffle(nodes)
    return nodes


def _job_samples(spec, rng, n_nodes, groups_for_kpi, kpi_names, t0):
    """Arrays (timestamp, node, value) for each KPI of one job."""
    lo, hi = spec.duration_range
    duration = int(rng.integers(lo, hi + 1))
    times = np.arange(0, duration + 1, spec.sample_interval)
    u = times / duration
    nodes = np.sort(rng.choice(spec.node_pool, size=n_nodes, replace=False))
    out = {}
    for j, name in enumerate(kpi_names):
        group = groups_for_kpi.get(name)
        jitter = rng.normal(0.0, spec.phase_jitter, size=n_nodes)
        scale = rng.uniform(0.8, 1.2, size=n_nodes)
        base = 10.0 * (j + 1)
        cols = []
        for m in range(n_nodes):
            if group is None:
                shape = np.zeros_like(u)
            else:
                shape = group_waveform(group, spec.group_count, j, u + jitter[m])
            noise_scale = spec.noise_sigma if group is not None else 1.0
            noise = rng.normal(0.0, noise_scale, size=u.shape) if noise_scale > 0 else 0.0
            cols.append(base + scale[m] * (shape + noise))
        out[name] = (t0 + times, nodes, np.column_stack(cols))
    return out


def generate(spec: SynthSpec) -> SynthDataset:
    """Generate records, operational flags and ground-truth groups."""
    spec.validate()
    root = np.random.SeedSequence(spec.seed)
    plan_rng = np.random.default_rng(root.spawn(1)[0])
    kpi_names = [k.name for k in spec.kpis]
    signal = set(spec.signal_kpis)

    node_counts = _node_counts(spec, plan_rng)
    group_sizes = _largest_remainder(spec.proportions(), spec.n_eligible)
    groups = np.repeat(np.arange(spec.group_count), group_sizes)
    plan_rng.shuffle(groups)

    kinds = (
        ["eligible"] * spec.n_eligible
        + ["operational"] * spec.n_operational
        + ["missing"] * spec.n_missing_kpi
        + ["single"] * spec.n_single_node
    )
    order = plan_rng.permutation(spec.n_jobs)
    width = max(5, len(str(spec.n_jobs)))
    job_ids = [f"job{i:0{width}d}" for i in range(spec.n_jobs)]

    columns = {name: ([], [], [], []) for name in kpi_names}
    flags, truth = {}, {}
    job_seeds = root.spawn(spec.n_jobs + 1)[1:]
    eligible_i = 0
    for slot, job_index in enumerate(order):
        kind = kinds[slot]
        job = job_ids[job_index]
        rng = np.random.default_rng(job_seeds[job_index])
        t0 = int(rng.integers(0, 60 * 24 * 3600))
        if kind == "eligible":
            g = int(groups[eligible_i])
            n_nodes = int(node_counts[eligible_i])
            eligible_i += 1
            truth[job] = g
        else:
            g = int(rng.integers(spec.group_count))
            n_nodes = 1 if kind == "single" else int(rng.integers(2, 6))
        present = list(kpi_names)
        if kind == "missing":
            present.pop(int(rng.integers(len(present))))
        groups_for_kpi = {name: g for name in present if name in signal}
        samples = _job_samples(spec, rng, n_nodes, groups_for_kpi, present, t0)
        for name, (times, nodes, values) in samples.items():
            ts, js, ns, vs = columns[name]
            t_len, m = values.shape
            ts.append(np.repeat(times, m))
            ns.append(np.tile(nodes, t_len))
            vs.append(values.ravel())
            js.append(np.full(t_len * m, job, dtype=object))
        flags[job] = kind == "operational"

    records = {}
    for name in kpi_names:
        ts, js, ns, vs = columns[name]
        frame = pd.DataFrame(
            {
                "timestamp": np.concatenate(ts).astype(np.int64) if ts else np.empty(0, np.int64),
                "job_id": np.concatenate(js) if js else np.empty(0, object),
                "node_id": np.array([f"node{n:03d}" for n in np.concatenate(ns)], dtype=object)
                if ns else np.empty(0, object),
                "value": np.concatenate(vs) if vs else np.empty(0),
            }
        )
        records[name] = frame.sort_values(["job_id", "node_id", "timestamp"], kind="stable").reset_index(drop=True)
    return SynthDataset(
        records=records,
        flags=dict(sorted(flags.items())),
        ground_truth=dict(sorted(truth.items())),
        catalog=tuple(spec.kpis),
    )


def write_dataset(dataset: SynthDataset, out_dir) -> dict:
    """Write ``kpis/<name>.csv``, ``catalog.json``, ``jobs.csv`` and ``ground_truth.csv``."""
    out = Path(out_dir)
    kpi_dir = out / "kpis"
    kpi_dir.mkdir(parents=True, exist_ok=True)
    for name, frame in dataset.records.items():
        write_kpi_records(frame, kpi_dir / f"{name}.csv")
    save_catalog(dataset.catalog, out / "catalog.json")
    write_operational_flags(dataset.flags, out / "jobs.csv")
    with open(out / "ground_truth.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["job_id", "group"])
        for job, g in dataset.ground_truth.items():
            w.writerow([job, g])
    return {
        "kpi_dir": str(kpi_dir),
        "catalog": str(out / "catalog.json"),
        "flags": str(out / "jobs.csv"),
        "ground_truth": str(out / "ground_truth.csv"),
    }
