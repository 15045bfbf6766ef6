import numpy as np
import pytest

from netflow_waves.galerkin import Scenario
from netflow_waves.nonlinearity import power_family


@pytest.fixture
def linear_model():
    return power_family(k0=0.0, k2=1.0, p=4.0, name="linear")


@pytest.fixture
def cubic_model():
    return power_family(k0=3.0, p=4.0, name="cubic")


def w(j, x, l_dom=1.0):
    return np.sqrt(2.0 / l_dom) * np.sin(j * np.pi * np.asarray(x) / l_dom)


@pytest.fixture
def cubic_scenario(cubic_model):
    return Scenario(cubic_model, m=32, u0=[0.1], t_final=1.0, dt=1e-4,
                    integrator="rk4", sample_every=100)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(verdicts):
        terminalreporter.write_line(verdicts[n])
