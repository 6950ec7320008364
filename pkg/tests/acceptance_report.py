"""Collects acceptance-criterion outcomes for the end-of-run summary."""
from __future__ import annotations

LINES: list[str] = []


def report(name: str, ok: bool, detail: str) -> bool:
    line = f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} - {detail}"
    LINES.append(line)
    print(line)
    return ok
