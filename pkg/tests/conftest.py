import pytest

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.failed:
        _outcomes[mark.args] = "FAIL"
    elif report.when == "call":
        _outcomes.setdefault(mark.args, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), verdict in sorted(_outcomes.items()):
        terminalreporter.write_line("criterion %d %s: %s" % (number, title, verdict))
