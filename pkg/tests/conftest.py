from __future__ import annotations

import pytest

VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion and assert it."""
    lines = request.config.stash.setdefault(VERDICTS, [])

    def record(number: int, title: str, checks: list[tuple[str, bool, str]]):
        ok = all(passed for _, passed, _ in checks)
        parts = "; ".join(f"{name} {'ok' if passed else 'FAILED'} ({detail})" for name, passed, detail in checks)
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {parts}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
