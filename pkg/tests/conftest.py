import pytest

from urllcgraph.params import SystemParams

_CRITERIA: list[str] = []


@pytest.fixture
def params():
    return SystemParams()


@pytest.fixture
def criterion():
    """Record one acceptance verdict line; the summary prints them all at the end."""

    def emit(label: str, ok: bool, detail: str):
        line = f"criterion {label}: {'PASS' if ok else 'FAIL'} | {detail}"
        _CRITERIA.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
