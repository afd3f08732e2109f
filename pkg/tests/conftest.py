from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def sqrt2():
    from orbitlab.numfield import make_field

    return make_field([-2, 0, 1], 1)


@pytest.fixture
def cubic49():
    from orbitlab.numfield import make_field

    return make_field([-1, -2, 1, 1], 2)


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []
    config.addinivalue_line("markers", "acceptance(n): acceptance criterion number n")


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the acceptance criterion of the calling test."""
    n = request.node.get_closest_marker("acceptance").args[0]
    lines = request.config.stash[_VERDICTS]
    seen = []

    def record(ok: bool, detail: str) -> bool:
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        seen.append(line)
        print(line)
        return ok

    yield record
    if not seen:
        lines.append(f"criterion {n}: FAIL  (raised before a verdict was reached)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
