"""Shared pytest wiring: print the acceptance scoreboard after a run."""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    module = sys.modules.get("test_acceptance")
    if module is None:
        return
    recorded = {number: entry for number, *entry in module.RESULTS}
    terminalreporter.write_sep("-", "acceptance criteria")
    for number in range(1, len(module.CRITERIA) + 1):
        description = module.CRITERIA[number]
        if number in recorded:
            _, passed, detail = recorded[number]
            verdict = "PASS" if passed else "FAIL"
            terminalreporter.write_line(
                f"[criterion {number:2d}] {verdict} {description}: {detail}"
            )
        else:
            terminalreporter.write_line(
                f"[criterion {number:2d}] FAIL {description}: "
                "no measurement recorded (test errored or was skipped)"
            )
