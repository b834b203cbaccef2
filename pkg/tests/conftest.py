import pytest

# (criterion, check, passed, detail) collected by tests/test_acceptance.py
ACCEPTANCE = []


@pytest.fixture
def record():
    def _record(criterion: str, check: str, passed: bool, detail: str):
        ACCEPTANCE.append((criterion, check, bool(passed), detail))
        return bool(passed)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for crit, check, ok, detail in sorted(ACCEPTANCE, key=lambda r: [int(p) for p in r[0].split(".")]):
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {crit:<5} {check}: {detail}")
    crits = sorted({c.split(".")[0] for c, *_ in ACCEPTANCE}, key=int)
    for c in crits:
        ok = all(r[2] for r in ACCEPTANCE if r[0].split(".")[0] == c)
        tr.write_line(f"criterion {c}: {'PASS' if ok else 'FAIL'}")
