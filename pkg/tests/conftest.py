import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fakestate.finite_stats import SessionStats  # noqa: E402
from fakestate.model import SourceLabel, SourceSpec, SystemParams  # noqa: E402

ETA_REF = 1.3589782741809073e-4
P_D = 8.5e-7
E_D = 0.033


@pytest.fixture
def ref_sys():
    return SystemParams()


@pytest.fixture
def ref_stats():
    return SessionStats()


@pytest.fixture
def signal():
    return SourceSpec(SourceLabel.SIGNAL, 0.479)


@pytest.fixture
def decoy():
    return SourceSpec(SourceLabel.DECOY, 0.127)


@pytest.fixture
def vacuum():
    return SourceSpec(SourceLabel.VACUUM, 0.0)


# acceptance lines collected by test_acceptance.record and echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
