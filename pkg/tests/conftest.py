import contextlib
import time

import pytest

ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Context manager recording one acceptance criterion as passed or failed."""
    rows = request.config.stash.setdefault(ACCEPTANCE, [])

    @contextlib.contextmanager
    def check(number: int, label: str, case: str = ""):
        start = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            why = f"{case + ': ' if case else ''}{type(exc).__name__}: {exc}"
            rows.append((number, label, False, time.perf_counter() - start, why))
            raise
        rows.append((number, label, True, time.perf_counter() - start, ""))

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = config.stash.get(ACCEPTANCE, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    grouped = {}
    for number, label, ok, seconds, why in rows:
        grouped.setdefault(number, (label, []))[1].append((ok, seconds, why))
    for number in sorted(grouped):
        label, parts = grouped[number]
        passed = sum(ok for ok, _, _ in parts)
        status = "PASS" if passed == len(parts) else "FAIL"
        seconds = sum(t for _, t, _ in parts)
        line = f"criterion {number:2d} {status}  {label}  [{passed}/{len(parts)} cases, {seconds:.2f}s]"
        failures = [why for ok, _, why in parts if not ok]
        if failures:
            line += f"  {failures[0].splitlines()[0][:120]}"
        terminalreporter.write_line(line)
