"""Print one pass/fail line per acceptance criterion at the end of the run."""

ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rpartition("::")[2]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_c"):
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        ACCEPTANCE[name] = (report.outcome.upper(), report.duration)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE):
        outcome, secs = ACCEPTANCE[name]
        label = name[len("test_"):]
        terminalreporter.write_line(f"{label:<45} {outcome:<7} {secs:7.2f}s")
