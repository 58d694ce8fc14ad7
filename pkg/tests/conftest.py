import numpy as np
import pytest

_BY_NODE: dict[str, tuple[int, str]] = {}
_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _BY_NODE[item.nodeid] = tuple(m.args)


def pytest_runtest_logreport(report):
    if report.nodeid not in _BY_NODE:
        return
    if report.when == "call" or report.outcome != "passed":
        number, title = _BY_NODE[report.nodeid]
        if report.outcome == "skipped":
            status = "SKIP"
        else:
            status = "PASS" if report.outcome == "passed" else "FAIL"
        if _RESULTS.get(number, ("", ""))[1] != "FAIL":
            _RESULTS[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, status = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}: {title}")
