import json
from pathlib import Path

import numpy as np
import pytest

from parsfm.instances import make_instance, zero_instance

DATA = Path(__file__).parent / "data"

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """Remember the outcome of one acceptance criterion for the end-of-run summary."""
    _ACCEPTANCE[number] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def e4():
    """Single edge {0,1} with unit weight, minus the indicator of element 2."""
    data = json.loads((DATA / "e4.json").read_text())
    return make_instance(data["kind"], data["n"], data["payload"])


@pytest.fixture
def edge2():
    return make_instance("graph-cut", 2, {"edges": [[0, 1, 1]]})


@pytest.fixture
def zero3():
    return zero_instance(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
