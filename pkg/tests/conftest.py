"""Shared fixtures: component values, kernel warm-up, acceptance reporting."""

from __future__ import annotations

import numpy as np
import pytest

from centaur.config import default_config


@pytest.fixture(scope="session")
def cfg() -> dict:
    return default_config()


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Pay the JIT compilation cost once, before any timed test runs."""
    from centaur.pedal import Pedal, PedalParams

    pedal = Pedal()
    pedal.process_block(PedalParams(engine="traditional"), np.zeros(64))
    pedal.process_block(PedalParams(engine="neural"), np.zeros(4096))
    yield


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion, then assert it."""
    lines = request.config._acceptance_lines

    def record(criterion: str, passed: bool, detail: str) -> None:
        status = "PASS" if passed else "FAIL"
        lines.append(f"{status}  {criterion}: {detail}")
        assert passed, f"{criterion}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
