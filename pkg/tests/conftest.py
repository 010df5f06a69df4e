import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "repro", derandomize=True, deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repro"))

ACCEPTANCE = {}
PROPERTY_FAILURES = []


def pytest_runtest_logreport(report):
    if report.when == "call" and report.failed and "test_acceptance" not in report.nodeid:
        PROPERTY_FAILURES.append(report.nodeid)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[key]
        if key == 8 and PROPERTY_FAILURES:
            ok, line = False, line + f"; {len(PROPERTY_FAILURES)} property/unit tests failed"
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}. {line}")
