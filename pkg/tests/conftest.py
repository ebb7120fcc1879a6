import sys
from pathlib import Path

import pytest

from enforcer_testgen.automaton import camera_release_enforcer, load_model

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA: list[str] = []


@pytest.fixture
def camera_enf():
    return camera_release_enforcer()


@pytest.fixture
def single_loop():
    return load_model({
        "states": ["s0"],
        "initial": "s0",
        "inputs": ["a_req"],
        "outputs": ["a_api"],
        "transitions": [{"from": "s0", "trigger": "a_req", "emissions": ["a_api"], "to": "s0"}],
    })


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    marker = request.node.get_closest_marker("criterion")
    label = marker.args[0] if marker else request.node.name
    yield label
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    CRITERIA.append(f"{'PASS' if ok else 'FAIL'}  {label}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
