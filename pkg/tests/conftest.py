import sys

import pytest

from levy_ruin.model import Exponential, RiskModel, TiltedPareto


@pytest.fixture
def exp_model():
    return RiskModel(1.0, 2.0, Exponential(1.0))


@pytest.fixture
def tp_model():
    return RiskModel(1.0, 2.0, TiltedPareto(1.0, 2.0, 1.0))


@pytest.fixture
def tp_light_model():
    return RiskModel(1.0, 2.0, TiltedPareto(1.0, 3.0, 1.0))



def pytest_terminal_summary(terminalreporter):
    results = {}
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance") and hasattr(mod, "RESULTS"):
            results = mod.RESULTS
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
