import sys

import numpy as np
import pytest

from stochcomp import CompartmentModel, FlowSpec, NoiseProcess


def one_flow_model(mu="mu", noise=True):
    """``X -> D`` at rate `mu`, optionally with gamma noise ``sigma2``."""
    rate = (lambda t, x, th, c: th[mu]) if isinstance(mu, str) else (lambda t, x, th, c: mu)
    if noise:
        return CompartmentModel(
            ("X", "D"), [FlowSpec("X", "D", rate, noise="xi")], noises=[NoiseProcess("xi", "sigma2")], autonomous=True
        )
    return CompartmentModel(("X", "D"), [FlowSpec("X", "D", rate)], autonomous=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdicts, one line per criterion."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
