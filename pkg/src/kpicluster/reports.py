"""CSV/JSON report writers for sweeps, KPI comparisons and run manifests.

Numbers are written with ``repr`` so identical runs give identical bytes;
``inf`` is spelled ``"inf"`` and undefined scores are left empty (CSV) or
``null`` (JSON).
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
from enum import Enum
from pathlib import Path
from typing import Mapping

import numpy as np

from .experiment import ConfigResult, HarnessResult, KpiRanking, SweepResult
from .validate import ALL_INDICES, Index

INDEX_ABBREV = {
    Index.CALINSKI_HARABASZ: "C",
    Index.DAVIES_BOULDIN: "D",
    Index.SILHOUETTE: "S",
}


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def jsonable(obj):
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(jsonable(k)): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _write(path, text: str) -> Path:
    path = Path(path)
    path.write_text(text)
    return path


def _config_columns(c: ConfigResult):
    return [c.config.algorithm, c.config.metric, c.config.linkage or ""]


def _optimal_cells(c: ConfigResult, index):
    opt = c.optimal.get(index)
    return ["", ""] if opt is None else [fmt(opt[0]), fmt(opt[1])]


def _indices(sweep: SweepResult):
    present = {i for c in sweep.configs for i in c.optimal}
    return [i for i in ALL_INDICES if i in present]


def sweep_dict(sweep: SweepResult) -> dict:
    return {
        "provenance": sweep.provenance,
        "configurations": [
            {
                "algorithm": c.config.algorithm,
                "metric": c.config.metric,
                "linkage": c.config.linkage,
                "optimal": {
                    i.value: (None if o is None else {"k": o[0], "score": o[1]})
                    for i, o in c.optimal.items()
                },
                "scores": [
                    {"k": k, **{i.value: v for i, v in row.items()}}
                    for k, row in sorted(c.scores.items())
                ],
            }
            for c in sweep.configs
        ],
    }


def experiment1_csv(sweep: SweepResult) -> str:
    """One row per configuration with K* and score* per index."""
    indices = _indices(sweep)
    header = ["algorithm", "metric", "linkage"]
    for i in indices:
        header += [f"{i.value}_k", f"{i.value}_score"]
    rows = [header]
    for c in sweep.configs:
        row = _config_columns(c)
        for i in indices:
            row += _optimal_cells(c, i)
        rows.append(row)
    return _csv_text(rows)


def experiment2_csv(sweeps: Mapping[str, SweepResult]) -> str:
    """Rows are KPI x index; column pairs (K, score) per configuration."""
    first = next(iter(sweeps.values()))
    labels = [c.config.label for c in first.configs]
    indices = _indices(first)
    header = ["kpi", "index"]
    for label in labels:
        header += [f"{label}:k", f"{label}:score"]
    rows = [header]
    for name, sweep in sweeps.items():
        by_label = sweep.by_label()
        for i in indices:
            row = [name, INDEX_ABBREV[i]]
            for label in labels:
                row += _optimal_cells(by_label[label], i)
            rows.append(row)
    return _csv_text(rows)


def validation_csv(sweeps: Mapping[str, SweepResult]) -> str:
    """Rows are configurations; column pairs (K, score) per KPI and index."""
    names = list(sweeps)
    first = sweeps[names[0]]
    indices = _indices(first)
    header = ["algorithm", "metric", "linkage"]
    for name in names:
        for i in indices:
            header += [f"{name}:{i.value}_k", f"{name}:{i.value}_score"]
    rows = [header]
    by_kpi = {n: sweeps[n].by_label() for n in names}
    for c in first.configs:
        row = _config_columns(c)
        for name in names:
            for i in indices:
                row += _optimal_cells(by_kpi[name][c.config.label], i)
        rows.append(row)
    return _csv_text(rows)


def curves_csv(sweeps: Mapping[str, SweepResult]) -> str:
    """Long-format (K, score) series for plotting quality curves."""
    rows = [["kpis", "algorithm", "metric", "linkage", "k"] + [i.value for i in ALL_INDICES]]
    for name, sweep in sweeps.items():
        for c in sweep.configs:
            for k, scores in sorted(c.scores.items()):
                rows.append(
                    [name, *_config_columns(c), fmt(k)] + [fmt(scores.get(i)) for i in ALL_INDICES]
                )
    return _csv_text(rows)


def ranking_dict(ranking: KpiRanking) -> dict:
    return {
        "best": {
            kpi: {
                i.value: (None if v is None else {"configuration": v[0], "k": v[1], "score": v[2]})
                for i, v in per.items()
            }
            for kpi, per in ranking.best.items()
        },
        "ranking": {i.value: r for i, r in ranking.ranking.items()},
        "index_winners": {i.value: w for i, w in ranking.index_winners.items()},
        "wins": ranking.wins,
        "winners": ranking.winners,
        "majority": ranking.majority,
        "winner": ranking.winner,
    }


def write_experiment1(sweep: SweepResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    return [
        _write(out / "experiment1.csv", experiment1_csv(sweep)),
        _write(out / "experiment1.json", dumps(sweep_dict(sweep))),
        _write(out / "curves_experiment1.csv", curves_csv({"all": sweep})),
    ]


def write_experiment2(sweeps: Mapping[str, SweepResult], out_dir) -> list[Path]:
    out = Path(out_dir)
    return [
        _write(out / "experiment2.csv", experiment2_csv(sweeps)),
        _write(out / "experiment2.json",
               dumps({"kpis": {n: sweep_dict(s) for n, s in sweeps.items()}})),
        _write(out / "curves_experiment2.csv", curves_csv(sweeps)),
    ]


def write_comparison(ranking: KpiRanking, out_dir, extra: Mapping | None = None) -> list[Path]:
    payload = ranking_dict(ranking)
    payload.update(extra or {})
    return [_write(Path(out_dir) / "comparison.json", dumps(payload))]


def write_validation(result: HarnessResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    payload = {
        "kpis": {n: sweep_dict(s) for n, s in result.sweeps.items()},
        "comparison": ranking_dict(result.ranking),
        "dominant": result.dominant,
        "summary": result.summary(),
    }
    return [
        _write(out / "validation.csv", validation_csv(result.sweeps)),
        _write(out / "validation.json", dumps(payload)),
        _write(out / "curves_validation.csv", curves_csv(result.sweeps)),
    ]


def load_sweep(d: Mapping) -> SweepResult:
    """Rebuild a :class:`SweepResult` from :func:`sweep_dict` output."""
    from .experiment import Configuration

    def num(v):
        if v == "inf":
            return math.inf
        return v

    configs = []
    for c in d["configurations"]:
        scores = {
            int(row["k"]): {Index(i): num(row[i.value]) for i in ALL_INDICES if i.value in row}
            for row in c["scores"]
        }
        optimal = {
            Index(i): (None if o is None else (int(o["k"]), num(o["score"])))
            for i, o in c["optimal"].items()
        }
        configs.append(
            ConfigResult(Configuration(c["algorithm"], c["metric"], c["linkage"]), scores, optimal)
        )
    return SweepResult(configs, dict(d.get("provenance", {})))


def manifest(command: str, config: Mapping, artifacts, timings: Mapping) -> dict:
    from . import __version__
    import numpy
    import pandas
    import sklearn

    return {
        "command": command,
        "config": dict(config),
        "artifacts": sorted(str(a) for a in artifacts),
        "versions": {
            "kpicluster": __version__,
            "python": platform.python_version(),
            "numpy": numpy.__version__,
            "pandas": pandas.__version__,
            "scikit-learn": sklearn.__version__,
        },
        "timings": dict(timings),
    }
