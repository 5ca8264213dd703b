import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def record(criterion: int, ok: bool, detail: str):
    ACCEPTANCE_LINES.append((criterion, "PASS" if ok else "FAIL", detail))
    print(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for crit, status, detail in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
        terminalreporter.write_line(f"criterion {crit:2d}: {status}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
