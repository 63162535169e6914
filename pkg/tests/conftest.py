import re

_ACCEPTANCE = {}
_NAME = re.compile(r"test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    m = _NAME.search(report.nodeid)
    if not m:
        return
    failed = report.failed or (report.when == "setup" and report.skipped)
    if report.when == "call" or failed:
        key = int(m.group(1))
        prev = _ACCEPTANCE.get(key, (None, True))[1]
        _ACCEPTANCE[key] = (m.group(2), prev and report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        name, ok = _ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:2d}  {'PASS' if ok else 'FAIL'}  {name}")
