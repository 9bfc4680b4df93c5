import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

_CRITERIA: list[str] = []


@pytest.fixture(scope="session")
def criterion_log():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return _CRITERIA


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)


def within_standard_errors(estimate, target, se, k=3.0, slack=1e-12):
    estimate, target, se = (np.asarray(x, dtype=float) for x in (estimate, target, se))
    return bool(np.all(np.abs(estimate - target) <= k * se + slack * np.maximum(1.0, np.abs(target))))
