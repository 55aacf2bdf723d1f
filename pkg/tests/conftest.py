import time

import pytest

_RESULTS = {}


class Criterion:
    """Times one acceptance criterion and records its pass/fail line."""

    def __init__(self, number, title, budget):
        self.number, self.title, self.budget = number, title, budget
        self.notes = []

    def note(self, text):
        self.notes.append(text)

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        ok = exc_type is None
        if ok and elapsed > self.budget:
            ok = False
            self.notes.append(f"over runtime budget {self.budget:g}s")
            detail = "; ".join(self.notes)
            _RESULTS[self.number] = (False, self.title, elapsed, detail)
            raise AssertionError(f"criterion {self.number} took {elapsed:.2f}s > {self.budget:g}s")
        if exc is not None:
            self.notes.append(str(exc).splitlines()[0][:160])
        _RESULTS[self.number] = (ok, self.title, elapsed, "; ".join(self.notes))
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, title, elapsed, detail = _RESULTS[number]
        line = f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title} ({elapsed:.2f}s)"
        if detail:
            line += f" -- {detail}"
        tr.write_line(line)
