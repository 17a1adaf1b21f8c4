import numpy as np
import pytest
from hypothesis import settings

from qsrsched.plant import PlantModel
from qsrsched.synthesis import default_points, synthesize_bank

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def manipulator_bank():
    return synthesize_bank(PlantModel(), default_points())


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def acceptance():
    """Record a one-line verdict for the terminal summary."""

    def record(number, name, ok, detail):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
