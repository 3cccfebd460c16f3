import re
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"

# outcome per acceptance-criterion test, filled as reports arrive
_criterion_results: dict[str, tuple[str, str]] = {}


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    match = re.search(r"test_c(\d+)", report.nodeid)
    if not match:
        return
    key = match.group(1)
    if report.when == "call":
        _criterion_results[key] = (report.outcome.upper(), report.nodeid)
    elif report.when == "setup" and report.skipped:
        _criterion_results[key] = ("SKIPPED", report.nodeid)
    elif report.when == "setup" and report.failed:
        _criterion_results[key] = ("ERROR", report.nodeid)


def pytest_terminal_summary(terminalreporter):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_criterion_results):
        outcome, nodeid = _criterion_results[key]
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"criterion {int(key):2d}: {outcome:7s} {name}")
