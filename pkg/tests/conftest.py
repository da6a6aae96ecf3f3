import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sirkit.cpw import CpwCrossSection, cpw_params  # noqa: E402


@pytest.fixture(scope="session")
def low_line():
    return cpw_params(CpwCrossSection(20.0, 10.0))


@pytest.fixture(scope="session")
def high_line():
    return cpw_params(CpwCrossSection(4.0, 18.0))


# one summary line per acceptance criterion, aggregated over its tests
_criteria = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "outcomes": [], "seconds": 0.0})
    entry["seconds"] += call.duration
    expected_failure = item.get_closest_marker("xfail") is not None
    if call.excinfo is None:
        outcome = "failed" if expected_failure else "passed"  # strict xfail
    elif expected_failure and call.excinfo.errisinstance(AssertionError):
        outcome = "xfailed"
    else:
        outcome = "failed"
    entry["outcomes"].append((item.name, outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        kinds = {o for _, o in entry["outcomes"]}
        status = "FAIL" if "failed" in kinds else ("XFAIL" if "xfailed" in kinds else "PASS")
        detail = ", ".join(f"{name}={o}" for name, o in entry["outcomes"] if o != "passed")
        line = f"criterion {number:2d} {entry['title']}: {status} in {entry['seconds']:.2f} s"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
