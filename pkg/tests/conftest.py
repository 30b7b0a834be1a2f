import datetime as dt

import pytest

from skylabel.propagation import GeoPoint

DAESAN = GeoPoint(37.00, 126.35)
KST = 9.0


@pytest.fixture
def daesan():
    return DAESAN


@pytest.fixture
def target_date():
    return dt.date(2023, 2, 12)


_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
