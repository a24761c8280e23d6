from pathlib import Path

import pytest

from district_dsm.data import generate_synthetic, load_dataset

FIXTURES = Path(__file__).parent / "fixtures"
ZONE_A = FIXTURES / "zone_a"


@pytest.fixture(scope="session")
def zone_a():
    return load_dataset(ZONE_A)


@pytest.fixture(scope="session")
def small_district():
    return generate_synthetic(3, 4, seed=5)


@pytest.fixture(scope="session")
def design_district():
    return generate_synthetic(9, 14, seed=1)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion; shown in the terminal summary."""

    def record(name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
