import pytest

_outcomes: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if report.when == "call" or (report.when == "setup" and not report.passed):
        status = "PASS" if report.passed else "FAIL"
        if _outcomes.get(n, ("PASS",))[0] == "PASS":
            doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
            _outcomes[n] = (status, doc)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        status, doc = _outcomes[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {doc}")
    passed = sum(s == "PASS" for s, _ in _outcomes.values())
    terminalreporter.write_line(f"{passed}/{len(_outcomes)} criteria passed")
