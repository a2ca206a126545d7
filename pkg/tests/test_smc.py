import numpy as np
import pytest
from scipy.stats import ks_2samp

from stochcomp import (
    CompartmentModel,
    EulerConfig,
    FilteringFailureError,
    FlowSpec,
    InvalidArgumentError,
    ObservedSeries,
    ReportingModel,
    RngStream,
    ScheduledInflow,
    StateVector,
    obs_logdensity,
    particle_filter,
    resample_multinomial,
    resample_systematic,
)
from stochcomp.models import SirParams, build_sir_model, sir_measurement
from stochcomp.smc import effective_sample_size


def test_multinomial_resampling():
    idx = resample_multinomial([0, 0, 3.0, 0], RngStream(1))
    assert np.all(idx == 2)
    J = 10**5
    idx = resample_multinomial(np.ones(J), RngStream(2))
    counts = np.bincount(idx, minlength=J)
    assert abs(counts.mean() - 1) < 1e-12 and abs(counts.var() - (1 - 1 / J)) < 4 * np.sqrt(2 / J)
    idx = resample_multinomial([0.75, 0.25], RngStream(3), size=J)
    f = np.mean(idx == 0)
    assert abs(f - 0.75) < 4 * np.sqrt(0.75 * 0.25 / J)


def test_systematic_resampling():
    assert np.array_equal(np.sort(resample_systematic(np.ones(7), RngStream(1))), np.arange(7))
    assert np.bincount(resample_systematic([0.5, 0.5, 0.0, 0.0], RngStream(2)), minlength=2)[:2].tolist() == [2, 2]
    w = np.array([0.3, 0.7])
    for s in range(50):
        c = np.bincount(resample_systematic(w, RngStream(s), size=10), minlength=2)
        assert c.tolist() == [3, 7]
    rng = np.random.default_rng(0)
    for s in range(50):
        w = rng.exponential(size=20)
        c = np.bincount(resample_systematic(w, RngStream(s)), minlength=20)
        assert np.all(np.abs(c - 20 * w / w.sum()) < 1)


def test_zero_weights_fail():
    with pytest.raises(FilteringFailureError):
        resample_multinomial(np.zeros(4), RngStream(1))
    with pytest.raises(FilteringFailureError):
        resample_systematic(np.zeros(4), RngStream(1))


def test_ess():
    assert effective_sample_size(np.ones(100)) == pytest.approx(100)
    assert effective_sample_size([0, 0, 1.0]) == 1.0
    assert effective_sample_size([2, 1, 1]) == pytest.approx(16 / 6)


def _deterministic_setup():
    # cases are a scheduled inflow, so the latent count is known exactly
    m = CompartmentModel(
        ("B", "S"), [FlowSpec("S", "B", lambda t, x, th, c: 0.0)], inflows=[ScheduledInflow("B", "S", lambda t: 10.0 * t)]
    )
    meas = ReportingModel({"cases": [("B", "S")]}, rho="rho", phi="phi")
    data = ObservedSeries([1.0, 2.0, 3.0, 4.0], [4, 6, 5, 9])
    return m, meas, data


def test_deterministic_dynamics_exact():
    m, meas, data = _deterministic_setup()
    th = {"rho": 0.5, "phi": 0.2}
    exact = sum(obs_logdensity(y, 10, 0.5, 0.2) for y in data.values[:, 0])
    for J in (2, 17, 500):
        r = particle_filter(m, meas, data, th, StateVector([0, 0]), J, EulerConfig(0.1), RngStream(1))
        assert r.loglik == pytest.approx(exact, abs=1e-9)
        assert r.loglik == np.sum(r.cond_logliks)


def _sir_data():
    p = SirParams()
    m = build_sir_model(p.N)
    from stochcomp import simulate_data

    data, _ = simulate_data(m, sir_measurement(), p.theta(), p.initial_state(), np.arange(2.0, 41.0, 2.0), EulerConfig(0.25), RngStream(7))
    return p, m, data


def test_filter_determinism_and_workers():
    p, m, data = _sir_data()
    args = (m, sir_measurement(), data, p.theta(), p.initial_state(), 2500, EulerConfig(0.25))
    a = particle_filter(*args, RngStream(5))
    b = particle_filter(*args, RngStream(5), workers=3)
    c = particle_filter(*args, RngStream(6))
    assert np.array_equal(a.cond_logliks, b.cond_logliks) and np.array_equal(a.filter_means, b.filter_means)
    assert a.loglik != c.loglik
    assert a.loglik == np.sum(a.cond_logliks)
    assert np.all((a.ess >= 1) & (a.ess <= 2500))


def test_filtering_failure_reports_time():
    # recruitment stops at t = 1, so reports in the second interval are impossible
    m = CompartmentModel(
        ("B", "S"), [FlowSpec("S", "B", lambda t, x, th, c: 0.0)], inflows=[ScheduledInflow("B", "S", lambda t: 10.0 * min(t, 1.0))]
    )
    meas = ReportingModel({"cases": [("B", "S")]})
    bad = ObservedSeries([1.0, 2.0], [4, 6])
    with pytest.raises(FilteringFailureError) as err:
        particle_filter(m, meas, bad, {"rho": 0.5, "phi": 0.0}, StateVector([0, 0]), 10, EulerConfig(0.1), RngStream(1))
    assert err.value.n == 2
    assert "particles" in str(err.value)


def test_filter_validation():
    m, meas, data = _deterministic_setup()
    with pytest.raises(InvalidArgumentError):
        particle_filter(m, meas, data, {"rho": 0.5, "phi": 0.2}, StateVector([0, 0]), 1, EulerConfig(0.1), RngStream(1))
    with pytest.raises(InvalidArgumentError):
        particle_filter(m, meas, data, {"rho": 0.5, "phi": 0.2}, StateVector([0, 0], 2.0), 10, EulerConfig(0.1), RngStream(1))
    with pytest.raises(InvalidArgumentError):
        particle_filter(m, meas, data, {"rho": 0.5, "phi": 0.2}, StateVector([0, 0]), 10, EulerConfig(0.1), RngStream(1), resampler="stratified")


def test_relabelling_leaves_loglik_law_unchanged():
    # a fixed relabelling of the root seeds gives the same distribution of estimates
    p, m, data = _sir_data()
    args = (m, sir_measurement(), data, p.theta(), p.initial_state(), 200, EulerConfig(0.25))
    a = [particle_filter(*args, RngStream(s)).loglik for s in range(20)]
    b = [particle_filter(*args, RngStream(1000 + 7 * s)).loglik for s in range(20)]
    assert ks_2samp(a, b).pvalue > 0.01
