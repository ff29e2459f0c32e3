import numpy as np
import pytest

from loopeq.estimator import build_solved


@pytest.fixture(scope="session")
def gauss_hier():
    """Gaussian point solved to genus two."""
    return build_solved(4, (0.0,) * 4, None, 2, 12)[1]


@pytest.fixture(scope="session")
def quartic_hier():
    return build_solved(4, (0.0, 0.0, 0.0, 0.05), None, 2, 12)[1]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    """Record one result line per acceptance criterion (echoed in the summary)."""

    def log(criterion, ok, text):
        ACCEPTANCE_LINES.append(f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {text}")
        print(ACCEPTANCE_LINES[-1])
        return ok

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
