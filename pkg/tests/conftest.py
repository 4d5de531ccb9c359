import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(number, description): top-level acceptance criterion; "
        "one summary line is printed per criterion at the end of the run",
    )


def pytest_collection_modifyitems(items):
    # acceptance tests run last so the summary reflects a finished module suite
    items.sort(key=lambda it: it.get_closest_marker("criterion") is not None)


_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and report.when == "call":
        number, description = marker.args
        passed = report.passed and _results.get(number, (True, description))[0]
        _results[number] = (passed, description)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        passed, description = _results[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[criterion {number}] {verdict} - {description}")
