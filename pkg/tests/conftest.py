import pytest

_RESULTS = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the test still asserts on its own."""

    def record(cid, title, passed, detail):
        _RESULTS.append((cid, title, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid, title, passed, detail in sorted(_RESULTS, key=lambda r: r[0]):
        tr.write_line(f"[{'PASS' if passed else 'FAIL'}] C{cid:<2} {title}: {detail}")
    n = sum(r[2] for r in _RESULTS)
    tr.write_line(f"{n}/{len(_RESULTS)} criteria met")
