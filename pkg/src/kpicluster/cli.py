"""Command-line entry point: ``kpicluster <command> [options]``.

Every command resolves its settings from built-in defaults, then an
optional INI file (``--config``), then explicit flags.  Analytical outputs
are deterministic; wall-clock data goes only into ``manifest_<command>.json``.
On failure the command prints one JSON line to stderr, removes the files it
created and exits non-zero.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import reports
from .catalog import DEFAULT_CATALOG, load_catalog
from .exceptions import ConfigurationError, KpiClusterError
from .experiment import SweepConfig, compare_kpis, experiment_one, experiment_two, validation_harness
from .ingest import (
    build_job_registry,
    filter_jobs,
    load_kpi_directory,
    node_count_histogram,
    read_operational_flags,
    write_filter_report,
    write_histogram,
)
from .pipeline import prepare_dataset, split_by_job
from .preprocess import DEFAULT_GRID_LENGTH, assemble_arrays, standardize
from .reduce import job_retained, retained_info_table
from .synth import SynthSpec, generate, write_dataset

EXIT_CONFIG = 2
EXIT_FAILURE = 1


def _csv_list(text):
    if isinstance(text, (list, tuple)):
        return tuple(text)
    return tuple(part.strip() for part in str(text).split(",") if part.strip())


# name -> (parser, default); names double as INI keys (dashes or underscores)
PARAMS = {
    "kpi_dir": (str, None),
    "catalog": (str, None),
    "flags": (str, None),
    "out": (str, None),
    "resample_len": (int, DEFAULT_GRID_LENGTH),
    "k_min": (int, 2),
    "k_max": (int, 200),
    "algorithms": (_csv_list, SweepConfig.algorithms),
    "metrics": (_csv_list, SweepConfig.metrics),
    "linkages": (_csv_list, SweepConfig.linkages),
    "indices": (_csv_list, SweepConfig.indices),
    "seed": (int, 0),
    "restarts": (int, 10),
    "jobs_parallel": (int, 1),
    "input": (str, None),
    "select": (_csv_list, None),
    "dump_matrices": (str, None),
    # synth only
    "n_jobs": (int, 300),
    "groups": (int, 3),
    "signal_kpis": (_csv_list, None),
    "noise_sigma": (float, 0.1),
    "n_operational": (int, 0),
    "n_missing_kpi": (int, 0),
    "n_single_node": (int, 0),
}

_DATA = ("kpi_dir", "catalog", "flags", "jobs_parallel")
_SWEEP = ("resample_len", "k_min", "k_max", "algorithms", "metrics", "linkages",
          "indices", "seed", "restarts")

COMMANDS = {
    "ingest": _DATA,
    "preprocess": _DATA + ("resample_len", "dump_matrices"),
    "experiment1": _DATA + _SWEEP,
    "experiment2": _DATA + _SWEEP,
    "compare": ("input",),
    "validate-run": _DATA + _SWEEP + ("select",),
    "synth": ("n_jobs", "groups", "signal_kpis", "noise_sigma", "n_operational",
              "n_missing_kpi", "n_single_node", "seed", "catalog"),
}

_HELP = {
    "kpi_dir": "directory holding one <kpi name>.csv per catalog KPI",
    "catalog": "catalog JSON (array of {name, category}); default is the built-in catalog",
    "flags": "CSV of job_id,operational; jobs not listed count as operational",
    "out": "output directory",
    "resample_len": "time grid length T",
    "algorithms": "comma list of kmeans,agglomerative",
    "metrics": "comma list of euclidean,manhattan,cosine",
    "linkages": "comma list of ward,average,complete,single",
    "indices": "comma list of calinski_harabasz,davies_bouldin,silhouette",
    "jobs_parallel": "worker processes for parsing and sweeps",
    "input": "experiment2.json to compare (default: <out>/experiment2.json)",
    "select": "KPIs compared by the validation run (default: both bond0 traffic KPIs)",
    "dump_matrices": "also write every standardized matrix as CSV under this directory",
    "n_jobs": "number of synthetic jobs",
    "groups": "number of planted job groups",
    "signal_kpis": "KPIs carrying the group structure (default: all)",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpicluster", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, params in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI file; [run] and [<command>] sections are read")
        p.add_argument("--out", help=_HELP["out"])
        for param in params:
            p.add_argument("--" + param.replace("_", "-"), dest=param, default=None,
                           help=_HELP.get(param))
    return parser


def _read_config_file(path, command) -> dict:
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from None
    values = {}
    for section in ("run", command):
        if parser.has_section(section):
            for key, value in parser.items(section):
                values[key.replace("-", "_")] = value
    unknown = sorted(set(values) - set(PARAMS))
    if unknown:
        raise ConfigurationError(f"unknown config key(s): {', '.join(unknown)}")
    return values


def resolve_settings(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    allowed = COMMANDS[args.command] + ("out",)
    raw = {}
    if args.config:
        raw.update({k: v for k, v in _read_config_file(args.config, args.command).items()
                    if k in allowed})
    raw.update({k: getattr(args, k) for k in allowed if getattr(args, k, None) is not None})
    settings = {}
    for key in allowed:
        convert, default = PARAMS[key]
        if key in raw:
            try:
                settings[key] = convert(raw[key])
            except ValueError:
                raise ConfigurationError(f"invalid value for {key}: {raw[key]!r}") from None
        else:
            settings[key] = default
    if not settings["out"]:
        raise ConfigurationError("an output directory is required (--out)")
    if settings.get("jobs_parallel", 1) < 1:
        raise ConfigurationError("jobs_parallel must be >= 1")
    return settings


def sweep_config(s: dict) -> SweepConfig:
    try:
        return SweepConfig(
            algorithms=s["algorithms"],
            metrics=s["metrics"],
            linkages=s["linkages"],
            k_min=s["k_min"],
            k_max=s["k_max"],
            indices=s["indices"],
            seed=s["seed"],
            n_points=s["resample_len"],
            restarts=s["restarts"],
            n_jobs=s["jobs_parallel"],
        ).validate()
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None


def _catalog(s):
    return load_catalog(s["catalog"]) if s.get("catalog") else list(DEFAULT_CATALOG)


def _load_inputs(s):
    for key in ("kpi_dir", "flags"):
        if not s[key]:
            raise ConfigurationError(f"--{key.replace('_', '-')} is required")
    catalog = _catalog(s)
    records, skipped = load_kpi_directory(s["kpi_dir"], catalog, s["jobs_parallel"])
    flags = read_operational_flags(s["flags"])
    return catalog, records, flags, skipped


def _prepared(s):
    catalog, records, flags, _ = _load_inputs(s)
    return prepare_dataset(records, flags, catalog, s["resample_len"])


class Run:
    """Tracks the files a command creates so a failure can remove them."""

    def __init__(self, out_dir: Path):
        self.out = out_dir
        self.created: list[Path] = []
        self.timings: dict[str, float] = {}

    def track(self, paths):
        for p in paths if isinstance(paths, (list, tuple)) else [paths]:
            self.created.append(Path(p))
        return paths

    def timed(self, label, fn, *args):
        start = time.perf_counter()
        try:
            return fn(*args)
        finally:
            self.timings[label] = round(time.perf_counter() - start, 6)

    def cleanup(self):
        for p in reversed(self.created):
            if p.is_file():
                p.unlink()
            elif p.is_dir():
                try:
                    p.rmdir()
                except OSError:
                    pass


def cmd_ingest(s, run: Run):
    catalog, records, flags, skipped = run.timed("parse", _load_inputs, s)
    registry = build_job_registry(records, flags)
    report = filter_jobs(registry, catalog)
    hist = node_count_histogram(report, registry)
    out = run.out
    run.track(out / "filter_report.json")
    write_filter_report(report, out / "filter_report.json")
    run.track(out / "node_histogram.csv")
    write_histogram(hist, out / "node_histogram.csv")
    run.track(out / "skipped_rows.csv")
    with open(out / "skipped_rows.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kpi", "skipped"])
        w.writerows(skipped.items())


def _dump_matrices(s, dataset, records, root: Path, run: Run):
    for kpi in dataset.catalog:
        per_job = split_by_job(records[kpi.name], set(dataset.job_ids))
        kpi_dir = root / kpi.name
        kpi_dir.mkdir(parents=True, exist_ok=True)
        run.track(kpi_dir)
        for job in dataset.job_ids:
            m = standardize(assemble_arrays(*per_job[job], s["resample_len"], job, kpi.name))
            path = kpi_dir / f"{job}.csv"
            run.track(path)
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["grid", *m.node_ids])
                for t, row in zip(m.grid, m.values):
                    w.writerow([reports.fmt(t), *map(reports.fmt, row)])


def cmd_preprocess(s, run: Run):
    catalog, records, flags, _ = run.timed("parse", _load_inputs, s)
    dataset = run.timed("prepare", prepare_dataset, records, flags, catalog, s["resample_len"])
    results = dataset.results()
    out = run.out
    run.track(out / "retained_info.csv")
    write_histogram(retained_info_table(results), out / "retained_info.csv", label="retained")
    run.track(out / "job_retained.csv")
    with open(out / "job_retained.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["job_id", "retained"])
        for job, value in job_retained(results).items():
            w.writerow([job, reports.fmt(value)])
    run.track(out / "degenerate_jobs.csv")
    with open(out / "degenerate_jobs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["job_id", "reason"])
        w.writerows(sorted(dataset.degenerate.items()))
    if s["dump_matrices"]:
        root = Path(s["dump_matrices"])
        if not root.exists():
            root.mkdir(parents=True)
            run.track(root)
        _dump_matrices(s, dataset, records, root, run)


def cmd_experiment1(s, run: Run):
    config = sweep_config(s)
    dataset = run.timed("prepare", _prepared, s)
    sweep = run.timed("sweep", experiment_one, dataset, config)
    run.track(reports.write_experiment1(sweep, run.out))


def cmd_experiment2(s, run: Run):
    config = sweep_config(s)
    dataset = run.timed("prepare", _prepared, s)
    sweeps = run.timed("sweep", experiment_two, dataset, config)
    run.track(reports.write_experiment2(sweeps, run.out))


def cmd_compare(s, run: Run):
    source = Path(s["input"]) if s["input"] else run.out / "experiment2.json"
    try:
        payload = json.loads(source.read_text())
        sweeps = {name: reports.load_sweep(d) for name, d in payload["kpis"].items()}
    except FileNotFoundError:
        raise ConfigurationError(f"no experiment-two results at {source}") from None
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"unreadable experiment-two results {source}: {exc}") from None
    ranking = compare_kpis(sweeps)
    summary = {"winner": ranking.winner, "dominant": ranking.dominant(), "source": str(source)}
    run.track(reports.write_comparison(ranking, run.out, {"summary": summary}))


def cmd_validate_run(s, run: Run):
    config = sweep_config(s)
    selected = s["select"] or (DEFAULT_CATALOG[3].name, DEFAULT_CATALOG[4].name)
    dataset = run.timed("prepare", _prepared, s)
    result = run.timed("sweep", validation_harness, dataset, selected, config)
    run.track(reports.write_validation(result, run.out))
    print(result.summary())


def cmd_synth(s, run: Run):
    catalog = _catalog(s)
    try:
        spec = SynthSpec(
            n_jobs=s["n_jobs"],
            group_count=s["groups"],
            kpis=tuple(catalog),
            signal_kpis=s["signal_kpis"],
            noise_sigma=s["noise_sigma"],
            n_operational=s["n_operational"],
            n_missing_kpi=s["n_missing_kpi"],
            n_single_node=s["n_single_node"],
            seed=s["seed"],
        )
        spec.validate()
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    dataset = run.timed("generate", generate, spec)
    if not (run.out / "kpis").exists():
        run.track(run.out / "kpis")
    paths = [run.out / "catalog.json", run.out / "jobs.csv", run.out / "ground_truth.csv"]
    paths += [run.out / "kpis" / f"{k.name}.csv" for k in catalog]
    run.track(paths)
    run.timed("write", write_dataset, dataset, run.out)


HANDLERS = {
    "ingest": cmd_ingest,
    "preprocess": cmd_preprocess,
    "experiment1": cmd_experiment1,
    "experiment2": cmd_experiment2,
    "compare": cmd_compare,
    "validate-run": cmd_validate_run,
    "synth": cmd_synth,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(command, settings, run: Run, started):
    out = run.out
    files = sorted(p for p in run.created if p.is_file())
    doc = reports.manifest(
        command,
        {k: (list(v) if isinstance(v, tuple) else v) for k, v in settings.items()},
        [p.relative_to(out) if p.is_relative_to(out) else p for p in files],
        {**run.timings, "started": started,
         "finished": datetime.now(timezone.utc).isoformat(timespec="seconds")},
    )
    doc["checksums"] = {
        str(p.relative_to(out) if p.is_relative_to(out) else p): _sha256(p) for p in files
    }
    path = out / f"manifest_{command.replace('-', '_')}.json"
    run.track(path)
    path.write_text(reports.dumps(doc))


def _fail(command, kind, message, status) -> int:
    line = {"status": "error", "command": command, "error": kind, "message": message}
    print(json.dumps(line, sort_keys=True), file=sys.stderr)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    command = args.command
    try:
        settings = resolve_settings(args)
    except ConfigurationError as exc:
        return _fail(command, "ConfigurationError", str(exc), EXIT_CONFIG)

    out = Path(settings["out"])
    run = Run(out)
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    try:
        if not out.exists():
            out.mkdir(parents=True)
            run.track(out)
        HANDLERS[command](settings, run)
        _write_manifest(command, settings, run, started)
    except ConfigurationError as exc:
        run.cleanup()
        return _fail(command, "ConfigurationError", str(exc), EXIT_CONFIG)
    except (KpiClusterError, OSError, ValueError, KeyError) as exc:
        run.cleanup()
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        return _fail(command, type(exc).__name__, str(message), EXIT_FAILURE)
    return 0


if __name__ == "__main__":
    sys.exit(main())
