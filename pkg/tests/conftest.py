"""Pass/fail summary lines for tests marked ``@pytest.mark.criterion(title)``."""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_titles: dict[str, str] = {}
_outcomes: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(title): an acceptance criterion reported in the summary")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _titles[item.nodeid] = mark.args[0]


def pytest_runtest_logreport(report):
    if report.nodeid not in _titles:
        return
    if report.failed:
        _outcomes[report.nodeid] = "FAIL"
    elif report.when == "call" and report.nodeid not in _outcomes:
        _outcomes[report.nodeid] = "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, title in _titles.items():
        if nodeid in _outcomes:
            terminalreporter.write_line(f"[{_outcomes[nodeid]}] {title}")
