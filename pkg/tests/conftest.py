import pytest

# criterion id -> (passed, message); filled by test_acceptance.py
ACCEPTANCE = {}


def record(cid, passed, message):
    ACCEPTANCE[cid] = (bool(passed), message)
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {cid}: {message}"
    print(line)
    return line


@pytest.fixture
def acceptance_record():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: (int(str(c).split()[0].rstrip("ab")), str(c))):
        ok, msg = ACCEPTANCE[cid]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {cid}: {msg}")
