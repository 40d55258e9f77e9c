import numpy as np
import pytest

from fracvar.grid import make_grid

CRITERIA: list[str] = []


@pytest.fixture
def record():
    def _record(criterion, passed, detail):
        CRITERIA.append(f"{'PASS' if passed else 'FAIL'}  criterion {criterion}: {detail}")
        print(CRITERIA[-1])
        return passed

    return _record


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def cube9():
    return make_grid([0.0] * 3, [1.0] * 3, [9] * 3)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
