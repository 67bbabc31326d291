import numpy as np
import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20110601)


@pytest.fixture
def record_criterion():
    """Collect one PASS/FAIL line per acceptance criterion for the summary."""

    def record(label, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] {label}"
        if detail:
            line += f" -- {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
