import pytest

from qdsig.bits import make_rng

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture
def verdict_line():
    """Record one PASS/FAIL line; the lines are printed in the terminal summary."""

    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
