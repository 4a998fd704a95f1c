import numpy as np
import pytest

from katofsi.body import BodyGeometry
from katofsi.grid import Grid

ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> bool:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def disk():
    return BodyGeometry.disk(1.0, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid64():
    return Grid(64, 3.0, True)


@pytest.fixture
def output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("KATOFSI_OUTPUT_ROOT", str(tmp_path))
    return tmp_path
