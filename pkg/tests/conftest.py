from __future__ import annotations

import pytest

_LINES: list[tuple[int, str]] = []


class Verdicts:
    """Collects one line per acceptance criterion; printed in the terminal summary."""

    def record(self, number: int, ok: bool, detail: str) -> bool:
        _LINES.append((number, f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"))
        print(_LINES[-1][1])
        return ok


@pytest.fixture(scope="session")
def verdicts():
    return Verdicts()


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_LINES):
        terminalreporter.write_line(line)
