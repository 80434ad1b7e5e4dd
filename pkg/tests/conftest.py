import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# acceptance outcomes, printed once at the end of the session
CRITERIA = {}


def record(num, ok, detail):
    CRITERIA[num] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        ok, detail = CRITERIA[num]
        status = {True: "PASS", False: "FAIL", None: "PARTIAL"}[ok]
        terminalreporter.write_line("criterion %d: %s  %s" % (num, status, detail))
