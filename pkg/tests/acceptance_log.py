"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

import time
from contextlib import contextmanager

LINES = []


@contextmanager
def criterion(number, title):
    """Time the block, record PASS or FAIL, and re-raise failures."""
    start = time.perf_counter()
    notes = {}
    try:
        yield notes
    except BaseException as exc:
        detail = f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        _add(number, title, False, time.perf_counter() - start, notes, detail)
        raise
    _add(number, title, True, time.perf_counter() - start, notes)


def _add(number, title, ok, seconds, notes, detail=""):
    facts = ", ".join(f"{k}={v}" for k, v in notes.items())
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({seconds:.2f}s{'; ' + facts if facts else ''})"
    if detail:
        line += f" -- {detail}"
    LINES.append((number, line))
    print(line)
