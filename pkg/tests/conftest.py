import numpy as np
import pytest

from lojatool import parse_poly

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """Record an acceptance criterion outcome: ``record(number, passed, detail)``."""
    def _record(number: int, passed: bool, detail: str) -> None:
        _CRITERIA[number] = (bool(passed), detail)
        print(f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")


@pytest.fixture
def P():
    return parse_poly


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)
