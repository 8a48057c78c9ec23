import csv
import json

import pytest

from conftest import RX, TX
from kpicluster.cli import main
from kpicluster.synth import SynthSpec, generate, write_dataset

SMALL = ["--k-max", "5", "--resample-len", "16", "--restarts", "2"]


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    write_dataset(generate(SynthSpec(n_jobs=20, seed=1, duration_range=(300, 600), n_operational=3,
                                     n_single_node=2, n_missing_kpi=1)), root)
    return root


def inputs(root):
    return ["--kpi-dir", str(root / "kpis"), "--flags", str(root / "jobs.csv"),
            "--catalog", str(root / "catalog.json")]


def error_line(capsys):
    lines = capsys.readouterr().err.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


def test_ingest_artifacts(data_dir, tmp_path):
    assert main(["ingest", *inputs(data_dir), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "filter_report.json").read_text())
    assert (report["total_jobs"], report["operational"], report["excluded_single_node"],
            report["excluded_missing_kpis"]) == (20, 3, 2, 1)
    rows = list(csv.reader(open(tmp_path / "node_histogram.csv")))
    assert rows[-1] == ["total", "14"]
    manifest = json.loads((tmp_path / "manifest_ingest.json").read_text())
    assert set(manifest["checksums"]) == {"filter_report.json", "node_histogram.csv",
                                          "skipped_rows.csv"}


def test_preprocess_with_matrix_dump(data_dir, tmp_path):
    dump = tmp_path / "mats"
    argv = ["preprocess", *inputs(data_dir), "--out", str(tmp_path), "--resample-len", "8",
            "--dump-matrices", str(dump)]
    assert main(argv) == 0
    rows = list(csv.reader(open(tmp_path / "job_retained.csv")))
    assert len(rows) == 15 and all(0 <= float(v) <= 1 for _, v in rows[1:])
    job = rows[1][0]
    matrix = list(csv.reader(open(dump / RX / f"{job}.csv")))
    assert len(matrix) == 9 and matrix[0][0] == "grid"


def test_experiment2_writes_index_rows(data_dir, tmp_path):
    assert main(["experiment2", *inputs(data_dir), "--out", str(tmp_path), *SMALL]) == 0
    rows = list(csv.reader(open(tmp_path / "experiment2.csv")))
    assert len(rows) == 1 + 33
    assert len(rows[0]) == 2 + 2 * 11


def test_compare_reads_experiment2(data_dir, tmp_path):
    assert main(["experiment2", *inputs(data_dir), "--out", str(tmp_path), *SMALL]) == 0
    assert main(["compare", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "comparison.json").read_text())
    assert set(doc["index_winners"]) == {"calinski_harabasz", "davies_bouldin", "silhouette"}
    assert doc["summary"]["winner"] == doc["winner"]


def test_validate_run_prints_summary(data_dir, tmp_path, capsys):
    assert main(["validate-run", *inputs(data_dir), "--out", str(tmp_path), *SMALL]) == 0
    out = capsys.readouterr().out
    assert RX in out or TX in out or "no dominant" in out
    rows = list(csv.reader(open(tmp_path / "validation.csv")))
    assert len(rows) == 12


def test_synth_then_experiment1(tmp_path):
    data = tmp_path / "data"
    assert main(["synth", "--out", str(data), "--n-jobs", "12", "--seed", "3"]) == 0
    assert (data / "kpis" / f"{RX}.csv").exists()
    out = tmp_path / "exp1"
    assert main(["experiment1", *inputs(data), "--out", str(out), *SMALL]) == 0
    assert len(list(csv.reader(open(out / "experiment1.csv")))) == 12


def test_k_range_error(data_dir, tmp_path, capsys):
    out = tmp_path / "run"
    status = main(["experiment1", *inputs(data_dir), "--out", str(out), "--k-max", "5",
                   "--k-min", "6"])
    assert status != 0
    line = error_line(capsys)
    assert line["status"] == "error" and line["error"] == "ConfigurationError"
    assert not out.exists()


def test_missing_out(capsys):
    assert main(["ingest"]) == 2
    assert "--out" in error_line(capsys)["message"]


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nbogus = 1\n")
    assert main(["ingest", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "bogus" in error_line(capsys)["message"]


def test_config_file_then_flags(data_dir, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nk-max = 4\nseed = 9\n[experiment1]\nresample_len = 16\n"
                   "restarts = 2\nk_max = 3\n")
    out = tmp_path / "o"
    assert main(["experiment1", "--config", str(cfg), *inputs(data_dir), "--out", str(out),
                 "--seed", "5"]) == 0
    config = json.loads((out / "manifest_experiment1.json").read_text())["config"]
    assert (config["k_max"], config["seed"], config["resample_len"]) == (3, 5, 16)


def test_failure_removes_partial_outputs(data_dir, tmp_path, capsys):
    out = tmp_path / "o"
    dump = tmp_path / "mats"
    dump.mkdir()
    (dump / RX).write_text("in the way")
    argv = ["preprocess", *inputs(data_dir), "--out", str(out), "--resample-len", "8",
            "--dump-matrices", str(dump)]
    assert main(argv) == 1
    assert error_line(capsys)["error"] == "FileExistsError"
    assert not out.exists()
    assert sorted(p.name for p in dump.iterdir()) == [RX]


def test_identical_runs(data_dir, tmp_path):
    docs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["experiment2", *inputs(data_dir), "--out", str(out), *SMALL]) == 0
        doc = json.loads((out / "manifest_experiment2.json").read_text())
        doc.pop("timings")
        doc["config"].pop("out")
        docs.append(doc)
        for f in ("experiment2.csv", "experiment2.json", "curves_experiment2.csv"):
            assert (out / f).read_bytes() == (tmp_path / "a" / f).read_bytes()
    assert docs[0] == docs[1]
