import warnings

import pytest

from layerfit.analysis import sweep

# criterion number -> (title, [(ok, detail), ...])
ACCEPTANCE: dict[int, tuple[str, list[tuple[bool, str]]]] = {}


@pytest.fixture(scope="session")
def table_report():
    """The full default sweep: four families, six eps columns, k = 4..12."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return sweep("paper-example-1")


@pytest.fixture
def record_criterion():
    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        ACCEPTANCE.setdefault(number, (title, []))[1].append((bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, parts = ACCEPTANCE[number]
        passed = sum(ok for ok, _ in parts)
        ok = passed == len(parts)
        failures = "; ".join(d for good, d in parts if not good)
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title} ({passed}/{len(parts)} checks)"
        terminalreporter.write_line(line + (f": {failures}" if failures else ""))
