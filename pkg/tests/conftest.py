import json
import os

import pytest

from ifomsim.config import parse_config

ORACLES = os.path.join(os.path.dirname(__file__), "oracles")


def small_config(**overrides):
    """A short scenario run; keys use the ``section.key`` form."""
    base = {"run.duration_s": "4", "run.warmup_s": "1", "run.load": "12"}
    base.update({k: str(v) for k, v in overrides.items()})
    return parse_config(None, base)


@pytest.fixture(scope="session")
def derived():
    with open(os.path.join(ORACLES, "derived_values.json")) as fh:
        return json.load(fh)


# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
