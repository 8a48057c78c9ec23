import pytest

from kpicluster.catalog import DEFAULT_CATALOG
from kpicluster.pipeline import prepare_dataset
from kpicluster.synth import SynthSpec, generate

RX = DEFAULT_CATALOG[3].name
TX = DEFAULT_CATALOG[4].name


@pytest.fixture(scope="session")
def small_synth():
    return generate(SynthSpec(n_jobs=40, group_count=3, seed=3, duration_range=(600, 1200),
                              signal_kpis=[RX], n_operational=4, n_single_node=2))


@pytest.fixture(scope="session")
def small_dataset(small_synth):
    ds = small_synth
    return prepare_dataset(ds.records, ds.flags, ds.catalog, n_points=32)


# one line per acceptance criterion, echoed after the run
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
