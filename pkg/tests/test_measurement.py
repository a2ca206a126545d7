import math

import numpy as np
import pytest
from scipy.special import logsumexp
from scipy.stats import poisson

from stochcomp import InvalidArgumentError, ReportingModel, RngStream, obs_logdensity, obs_sample
from stochcomp.measurement import extract_cases
from stochcomp.models import build_cholera_model, cholera_measurement


def test_zero_latent_cases():
    assert obs_logdensity(0, 0, 0.5, 0.1) == 0.0
    assert obs_logdensity(3, 0, 0.5, 0.1) == -np.inf
    assert np.all(obs_sample(np.zeros(100, dtype=int), 0.5, 0.1, RngStream(1)) == 0)


def test_poisson_value():
    assert obs_logdensity(5, 5, 1.0, 0.0) == pytest.approx(5 * math.log(5) - 5 - math.log(120), abs=1e-12)
    assert obs_logdensity(5, 5, 1.0, 0.0) == pytest.approx(-1.7403, abs=1e-4)


@pytest.mark.parametrize("rho", [0.1, 0.5, 1.0])
@pytest.mark.parametrize("phi", [0.0, 0.1, 1.0])
def test_normalisation(rho, phi):
    y = np.arange(0, 20000)
    for c in (1, 7, 50, 200):
        total = logsumexp(obs_logdensity(y, c, rho, phi))
        assert abs(math.expm1(total)) < 1e-8


def test_phi_continuity():
    # the exact gap is about phi * ((y - mean)**2 - y) / 2, so compare where Poisson(50) has mass
    y = np.arange(0, 151)
    a = obs_logdensity(y, 100, 0.5, 1e-8)
    b = poisson.logpmf(y, 50)
    assert np.max(np.abs(a - b)) < 1e-4


def test_invalid_reporting():
    for rho, phi in ((0.0, 0.1), (1.5, 0.1), (0.5, -1.0)):
        with pytest.raises(InvalidArgumentError):
            obs_logdensity(1, 1, rho, phi)


def test_poisson_sampling_moments():
    y = obs_sample(np.full(10**5, 30), 1.0, 0.0, RngStream(2))
    assert abs(y.mean() - 30) < 4 * math.sqrt(30 / 1e5)


def test_extract_cases_examples():
    assert extract_cases({"c": [0]}, np.array([[4]]), np.array([[4]])).tolist() == [[0]]
    assert extract_cases({"c": [0]}, np.array([[10]]), np.array([[25]])).tolist() == [[15]]


def test_cholera_channels_and_independence():
    m = build_cholera_model()
    meas = cholera_measurement().bind(m)
    dN = np.zeros((1, len(m.flow_labels)), dtype=np.int64)
    dN[0, m.flow_column("S", "I1")] = 3
    dN[0, m.flow_column("S1", "I1s")] = 2
    dN[0, m.flow_column("S", "I2")] = 4
    assert meas.cases(dN).tolist() == [[5, 4]]
    th = {"rho": np.array([0.6]), "phi": np.array([0.2])}
    joint = meas.logdensity([3.0, 1.0], None, dN, th, 0.0)
    sep = obs_logdensity(3, 5, 0.6, 0.2) + obs_logdensity(1, 4, 0.6, 0.2)
    assert joint[0] == sep


def test_missing_observations_are_skipped():
    m = build_cholera_model()
    meas = cholera_measurement().bind(m)
    dN = np.zeros((1, len(m.flow_labels)), dtype=np.int64)
    dN[0, m.flow_column("S", "I1")] = 5
    th = {"rho": np.array([0.6]), "phi": np.array([0.2])}
    assert meas.logdensity([3.0, np.nan], None, dN, th, 0.0)[0] == obs_logdensity(3, 5, 0.6, 0.2)


def test_unbound_reporting_model():
    with pytest.raises(InvalidArgumentError, match="bind"):
        ReportingModel({"c": [("S", "I")]}).cases(np.zeros((1, 1)))
