from __future__ import annotations

import pytest

from esteem.fixtures import f1_corpus, f1_text
from esteem.periods import default_periods, partition

_ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(id, title): exit criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    crit_id, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        previous = _ACCEPTANCE.get(crit_id, (title, "PASS"))[1]
        status = "PASS" if report.outcome == "passed" and previous == "PASS" else "FAIL"
        if report.outcome == "skipped":
            status = "SKIP"
        _ACCEPTANCE[crit_id] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit_id in sorted(_ACCEPTANCE, key=lambda c: int(c.lstrip("AC"))):
        title, status = _ACCEPTANCE[crit_id]
        terminalreporter.write_line(f"{crit_id:<5} {status:<4}  {title}")


@pytest.fixture
def f1():
    return f1_corpus()


@pytest.fixture
def f1_text_():
    return f1_text()


@pytest.fixture
def f1_p2(f1):
    return partition(f1, default_periods())["P2"]
