import os
import pathlib
import sys

from hypothesis import settings

from geoslepian.cli import CALIFORNIA_ENV

sys.path.insert(0, str(pathlib.Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

REPO = pathlib.Path(__file__).resolve().parent.parent


def california_csv():
    """Path to the housing CSV, or None when it is not available locally."""
    p = os.environ.get(CALIFORNIA_ENV, str(REPO / "data" / "housing.csv"))
    return p if os.path.exists(p) else None


# one summary line per acceptance criterion, printed even under output capture
_CRITERIA = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        detail = report.capstdout.strip().replace("\n", "; ")
        if report.outcome == "skipped" and isinstance(report.longrepr, tuple):
            detail = report.longrepr[2]
        _CRITERIA[report.nodeid] = (status, report.duration, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (status, secs, detail) in sorted(_CRITERIA.items()):
        name = nodeid.split("::")[-1]
        line = f"{status}  {name}  ({secs:.2f} s)"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
