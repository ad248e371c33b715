"""Shared test plumbing: the acceptance-line reporter."""

import pytest

_RESULTS: list[tuple[int, str, str]] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion, then assert.

    Usage: acceptance(criterion_number, ok_bool, detail). A final summary
    block prints every recorded line after the run.
    """

    def record(criterion: int, ok, detail: str = ""):
        if ok is None:
            _RESULTS.append((criterion, "SKIP", detail))
            pytest.skip(detail)
        _RESULTS.append((criterion, "PASS" if ok else "FAIL", detail))
        assert ok, f"criterion {criterion}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for n, status, detail in sorted(_RESULTS):
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}")
