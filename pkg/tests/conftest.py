import hashlib
import json

import pytest

from cokflag import cli

GOLDEN_ARGS = [
    "simulate", "--p", "2", "--n", "60", "--k", "2", "--samples", "50000",
    "--dist", "uniform:0..7", "--seed", "1", "--no-timing",
]

_criteria: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture(scope="session")
def golden_report(tmp_path_factory):
    """The k = 2 simulate report shared by the golden-file test and criterion 5."""
    path = tmp_path_factory.mktemp("golden") / "report.json"
    assert cli.main(GOLDEN_ARGS + ["--output", str(path)]) == 0
    data = path.read_bytes()
    return {"bytes": data, "sha256": hashlib.sha256(data).hexdigest(), "report": json.loads(data)}


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    detail = dict(report.user_properties).get("detail", "")
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria[number] = ("PASS" if report.passed else "FAIL", title, detail)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("criterion")
    if m is not None:
        outcome.get_result().criterion = tuple(m.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        status, title, detail = _criteria[number]
        line = f"{status} criterion {number}: {title}"
        terminalreporter.write_line(f"{line} ({detail})" if detail else line)
