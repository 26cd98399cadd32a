"""Suite-wide wiring: one summary line per acceptance check.

Tests marked ``@pytest.mark.acceptance(num, label)`` report their
outcome in a dedicated terminal section so the end-to-end gate reads as
a simple pass/fail list.
"""

import pytest

_RESULTS: dict[int, tuple[str, str]] = {}

# Free-form measurement lines (reported, not asserted) that acceptance
# tests may append to; printed under the same terminal section.
NOTES: list[str] = []


@pytest.fixture
def acceptance_notes():
    """The mutable report-line list owned by this plugin instance."""
    return NOTES


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    num, label = marker.args
    if report.when == "call":
        _RESULTS[num] = ("PASS" if report.passed else "FAIL", label)
    elif report.when == "setup" and (report.failed or report.skipped):
        _RESULTS[num] = ("FAIL", label)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        status, label = _RESULTS[num]
        terminalreporter.write_line(f"criterion {num}: {status} - {label}")
    for note in NOTES:
        terminalreporter.write_line(note)
