"""K sweeps over clustering configurations, the two experiments and KPI comparison."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from joblib import Parallel, delayed

from ._validation import check_matrix
from .cluster import Linkage, Metric, check_pairing, cut_labels, kmeans, linkage_tree, pairwise_distances
from .exceptions import ConfigurationError
from .validate import ALL_INDICES, Index, better, score_partition, select_optimal_k

logger = logging.getLogger(__name__)

KMEANS = "kmeans"
AGGLOMERATIVE = "agglomerative"

# row order of the configuration grid
_METRIC_ORDER = (Metric.COSINE, Metric.EUCLIDEAN, Metric.MANHATTAN)
_LINKAGE_ORDER = (Linkage.WARD, Linkage.AVERAGE, Linkage.COMPLETE, Linkage.SINGLE)


@dataclass(frozen=True)
class Configuration:
    algorithm: str
    metric: str
    linkage: str | None = None

    @property
    def label(self) -> str:
        parts = [self.algorithm, self.metric] + ([self.linkage] if self.linkage else [])
        return "/".join(parts)

    def validate(self) -> "Configuration":
        if self.algorithm == KMEANS:
            if Metric(self.metric) is not Metric.EUCLIDEAN or self.linkage is not None:
                raise ConfigurationError("k-means runs with the euclidean metric only")
        elif self.algorithm == AGGLOMERATIVE:
            if self.linkage is None:
                raise ConfigurationError("agglomerative configuration needs a linkage")
            check_pairing(self.metric, self.linkage)
        else:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        return self


@dataclass(frozen=True)
class SweepConfig:
    """Which configurations to run and over which K range.

    The configuration grid is the admissible part of
    ``algorithms x metrics x linkages``: k-means only with Euclidean
    distance, Ward only with Euclidean distance.  ``configurations``
    overrides the grid with an explicit list, each entry validated.
    """

    algorithms: tuple = (KMEANS, AGGLOMERATIVE)
    metrics: tuple = tuple(m.value for m in _METRIC_ORDER)
    linkages: tuple = tuple(l.value for l in _LINKAGE_ORDER)
    k_min: int = 2
    k_max: int = 200
    indices: tuple = tuple(i.value for i in ALL_INDICES)
    seed: int = 0
    n_points: int = 128
    restarts: int = 10
    max_iter: int = 300
    tol: float = 1e-6
    n_jobs: int = 1
    configurations: tuple | None = None

    def validate(self) -> "SweepConfig":
        if self.k_min < 2:
            raise ConfigurationError(f"k_min must be >= 2, got {self.k_min}")
        if self.k_max < self.k_min:
            raise ConfigurationError(f"k_max={self.k_max} is below k_min={self.k_min}")
        if self.restarts < 1:
            raise ConfigurationError("restarts must be >= 1")
        if self.n_points < 2:
            raise ConfigurationError("n_points must be >= 2")
        for a in self.algorithms:
            if a not in (KMEANS, AGGLOMERATIVE):
                raise ConfigurationError(f"unknown algorithm {a!r}")
        try:
            [Metric(m) for m in self.metrics]
            [Linkage(l) for l in self.linkages]
            [Index(i) for i in self.indices]
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        if not self.indices:
            raise ConfigurationError("at least one validation index is required")
        if not self.grid():
            raise ConfigurationError("no admissible configuration in the requested grid")
        return self

    def grid(self) -> list[Configuration]:
        if self.configurations is not None:
            return [Configuration(*c).validate() if not isinstance(c, Configuration)
                    else c.validate() for c in self.configurations]
        out = []
        metrics = {Metric(m) for m in self.metrics}
        linkages = {Linkage(l) for l in self.linkages}
        if KMEANS in self.algorithms:
            out.append(Configuration(KMEANS, Metric.EUCLIDEAN.value))
        if AGGLOMERATIVE in self.algorithms:
            for m in _METRIC_ORDER:
                if m not in metrics:
                    continue
                for l in _LINKAGE_ORDER:
                    if l in linkages and not (l is Linkage.WARD and m is not Metric.EUCLIDEAN):
                        out.append(Configuration(AGGLOMERATIVE, m.value, l.value))
        return out

    def k_range(self, n_samples: int) -> range:
        return range(self.k_min, min(self.k_max, n_samples - 1) + 1)


@dataclass
class ConfigResult:
    """Scores of one configuration for every K, plus the per-index optimum."""

    config: Configuration
    scores: dict
    optimal: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.optimal:
            self.optimal = compute_optimal(self.scores)


def compute_optimal(scores: Mapping[int, Mapping]) -> dict:
    optimal = {}
    indices = {i for row in scores.values() for i in row}
    for index in ALL_INDICES:
        if index not in indices:
            continue
        try:
            optimal[index] = select_optimal_k({k: row.get(index) for k, row in scores.items()}, index)
        except ValueError:
            optimal[index] = None
    return optimal


@dataclass
class SweepResult:
    configs: list
    provenance: dict = field(default_factory=dict)

    def by_label(self) -> dict:
        return {c.config.label: c for c in self.configs}

    def best(self, index) -> tuple | None:
        """Best optimum of one index over all configurations: ``(label, K, score)``."""
        index = Index(index)
        found = None
        for c in self.configs:
            opt = c.optimal.get(index)
            if opt is None:
                continue
            if found is None or better(opt[1], found[2], index):
                found = (c.config.label, opt[0], opt[1])
        return found


def kmeans_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


def partition(X, config: Configuration, k: int, sweep: SweepConfig, tree=None) -> np.ndarray:
    """Labels of one (configuration, K) cell."""
    if config.algorithm == KMEANS:
        return kmeans(X, k, seed=kmeans_seed(sweep.seed, k), restarts=sweep.restarts,
                      max_iter=sweep.max_iter, tol=sweep.tol).labels
    if tree is None:
        tree = linkage_tree(pairwise_distances(X, config.metric), config.linkage)
    return cut_labels(tree, k)


def _run_config(X, config, sweep, distances):
    indices = [Index(i) for i in sweep.indices]
    tree = None
    if config.algorithm == AGGLOMERATIVE:
        tree = linkage_tree(distances[config.metric], config.linkage)
    sil_d = distances[config.metric]
    scores = {}
    for k in sweep.k_range(X.shape[0]):
        labels = partition(X, config, k, sweep, tree)
        row = score_partition(X, labels, config.metric, sil_d)
        scores[k] = {i: row[i] for i in indices}
    return ConfigResult(config, scores)


def run_sweep(features, config: SweepConfig, provenance: Mapping | None = None) -> SweepResult:
    """Cluster ``features`` for every configuration and every K, and score each partition.

    Agglomerative configurations build one tree and cut it at each K;
    k-means is refitted per K with a seed derived from ``(seed, K)``.
    """
    config.validate()
    if not isinstance(features, np.ndarray):
        features = [getattr(f, "data", f) for f in features]
    X = check_matrix(features)
    if X.shape[0] < 3:
        raise ValueError(f"need at least 3 feature vectors, got {X.shape[0]}")
    if not config.k_range(X.shape[0]):
        raise ConfigurationError(
            f"k_min={config.k_min} leaves no K below N={X.shape[0]}"
        )
    grid = config.grid()
    metrics = sorted({c.metric for c in grid})
    distances = {m: pairwise_distances(X, m) for m in metrics}
    results = Parallel(n_jobs=config.n_jobs)(
        delayed(_run_config)(X, c, config, distances) for c in grid
    )
    ks = config.k_range(X.shape[0])
    prov = {
        "seed": config.seed,
        "n_points": config.n_points,
        "restarts": config.restarts,
        "k_min": ks.start,
        "k_max": ks.stop - 1,
        "n_samples": int(X.shape[0]),
        "n_features": int(X.shape[1]),
    }
    prov.update(provenance or {})
    return SweepResult(list(results), prov)


def experiment_one(dataset, config: SweepConfig) -> SweepResult:
    """Sweep over the combined features of every catalog KPI."""
    selection = list(dataset.kpi_names)
    return run_sweep(dataset.features(selection), config,
                     {"kpis": selection, "job_ids": list(dataset.job_ids)})


def experiment_two(dataset, config: SweepConfig, kpis: Sequence[str] | None = None) -> dict:
    """One independent sweep per KPI, in catalog order."""
    kpis = list(dataset.kpi_names if kpis is None else kpis)
    return {
        name: run_sweep(dataset.features([name]), config,
                        {"kpis": [name], "job_ids": list(dataset.job_ids)})
        for name in kpis
    }


@dataclass
class KpiRanking:
    """Per-index comparison of KPIs by their best score over all configurations.

    ``best[kpi][index]`` is ``(configuration label, K, score)``.
    ``winners`` holds the KPI(s) with the most index wins; ``majority`` tells
    whether that count is a strict majority of the indices compared.
    """

    best: dict
    ranking: dict
    index_winners: dict
    wins: dict
    winners: list
    majority: bool

    @property
    def winner(self) -> str | None:
        return self.winners[0] if len(self.winners) == 1 and self.majority else None

    def dominant(self) -> str | None:
        """The KPI that is the sole winner of every index, if any."""
        sole = {tuple(w) for w in self.index_winners.values()}
        if len(sole) == 1:
            (only,) = sole
            if len(only) == 1:
                return only[0]
        return None


def compare_kpis(exp2: Mapping[str, SweepResult]) -> KpiRanking:
    if not exp2:
        raise ValueError("nothing to compare")
    names = list(exp2)
    best = {name: {} for name in names}
    indices = []
    for index in ALL_INDICES:
        found = {name: exp2[name].best(index) for name in names}
        if all(v is None for v in found.values()):
            continue
        indices.append(index)
        for name, v in found.items():
            best[name][index] = v
    ranking, index_winners = {}, {}
    wins = dict.fromkeys(names, 0)
    for index in indices:
        scored = [n for n in names if best[n][index] is not None]
        sign = -1.0 if index.maximize else 1.0
        ranked = sorted(scored, key=lambda n: sign * best[n][index][2])
        ranking[index] = ranked
        top = best[ranked[0]][index][2]
        index_winners[index] = [n for n in ranked if best[n][index][2] == top]
        for n in index_winners[index]:
            wins[n] += 1
    most = max(wins.values())
    winners = [n for n in names if wins[n] == most and most > 0]
    return KpiRanking(
        best=best,
        ranking=ranking,
        index_winners=index_winners,
        wins=wins,
        winners=winners,
        majority=most > len(indices) / 2,
    )


@dataclass
class HarnessResult:
    sweeps: dict
    ranking: KpiRanking

    @property
    def dominant(self) -> str | None:
        return self.ranking.dominant()

    def summary(self) -> str:
        if self.dominant is not None:
            return f"{self.dominant} showed better clustering results in all measures"
        parts = [f"{i.value}: {', '.join(w)}" for i, w in self.ranking.index_winners.items()]
        return "no dominant KPI; per-index winners - " + "; ".join(parts)


def validation_harness(dataset, selected_kpis: Sequence[str], config: SweepConfig) -> HarnessResult:
    """Per-KPI sweeps restricted to ``selected_kpis`` and their comparison."""
    missing = [k for k in selected_kpis if k not in dataset.kpi_names]
    if missing:
        raise ConfigurationError(f"selected KPI(s) not in catalog: {', '.join(missing)}")
    sweeps = experiment_two(dataset, config, selected_kpis)
    return HarnessResult(sweeps, compare_kpis(sweeps))
