"""Collects one pass/fail line per acceptance criterion (printed by conftest)."""

RESULTS: list[tuple[str, bool, str]] = []


def report(criterion: str, ok: bool, detail: str) -> None:
    RESULTS.append((criterion, bool(ok), detail))
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
