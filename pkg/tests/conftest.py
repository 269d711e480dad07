import pytest

_criteria: list[tuple[int, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    printed = [ln for ln in rep.capstdout.splitlines() if ln.startswith(f"criterion {number}:")]
    line = printed[-1] if printed else f"criterion {number}: {'PASS' if rep.passed else 'FAIL'}  {title}"
    if not rep.passed and "PASS" in line.split()[2:3]:
        line = f"criterion {number}: FAIL  {title} (failed after its check line)"
    _criteria.append((number, line))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_criteria):
        terminalreporter.write_line(line)
