import numpy as np
import pytest

from stochcomp import (
    InvalidArgumentError,
    RngStream,
    SingularInformationError,
    SliceSpec,
    chi2_quantile,
    fisher_information,
    likelihood_ratio_test,
    local_quadratic_fit,
    profile_likelihood,
    sliced_likelihood,
    standard_errors,
)
from stochcomp.likelihood import default_offsets, profile_from_values


def test_chi2_quantiles():
    assert chi2_quantile(0.99) == pytest.approx(6.634896601, abs=1e-8)
    assert chi2_quantile(0.95) == pytest.approx(3.841458821, abs=1e-8)
    assert chi2_quantile(1e-12) < 1e-20
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(InvalidArgumentError):
            chi2_quantile(bad)


def test_likelihood_ratio_decision():
    r = likelihood_ratio_test(-2504.9, -2662.0, df=1)
    assert r["reject_restricted"] and r["statistic"] == pytest.approx(314.2)
    assert r["critical"] == pytest.approx(6.634896601, abs=1e-8)
    assert not likelihood_ratio_test(-100.0, -101.0, df=1)["reject_restricted"]


def test_exact_quadratic_slices():
    spec = [SliceSpec(i, np.linspace(-1, 1, 9)) for i in range(3)]
    res = sliced_likelihood(lambda th, s: -float(np.sum(th**2)), np.zeros(3), spec, RngStream(1))
    for i in range(3):
        assert np.allclose(res.mean_logliks(i), -np.linspace(-1, 1, 9) ** 2)


def test_slice_spec_validation():
    with pytest.raises(InvalidArgumentError):
        SliceSpec(0, [0.0, 0.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        SliceSpec(0, [0.1, 0.2, 0.3])
    with pytest.raises(InvalidArgumentError):
        SliceSpec(0, [-1, 0, 1], span=1.5)
    z = default_offsets(0.5)
    assert z.size == 21 and z[0] == -1.0 and z[-1] == 1.0 and 0.0 in z


def test_slice_failures_are_missing():
    def ev(th, s):
        if th[0] > 0.5:
            raise ArithmeticError("bad")
        return -th[0] ** 2

    res = sliced_likelihood(ev, np.zeros(1), [SliceSpec(0, np.linspace(-1, 1, 5))], RngStream(1))
    assert np.isnan(res.logliks[0][-1, 0]) and np.isfinite(res.logliks[0][0, 0])


def test_common_random_numbers():
    seen = []

    def ev(th, s):
        seen.append(s)
        return 0.0

    sliced_likelihood(ev, np.zeros(1), [SliceSpec(0, [-1, 0, 1], reps=2)], RngStream(1))
    assert seen[0] == seen[2] == seen[4] and seen[0] != seen[1]
    seen.clear()
    sliced_likelihood(ev, np.zeros(1), [SliceSpec(0, [-1, 0, 1])], RngStream(1), common_random_numbers=False)
    assert len(set(seen)) == 3


def test_local_quadratic_examples():
    z = np.linspace(-1, 1, 41)
    assert local_quadratic_fit(z, -(z - 0.3) ** 2).argmax == pytest.approx(0.3, abs=1e-3)
    flat = local_quadratic_fit(z, np.full(z.size, 2.0))
    assert flat.argmax == -1.0 and np.allclose(flat.fitted, 2.0)
    with pytest.raises(InvalidArgumentError):
        local_quadratic_fit(z[:4], z[:4])


def test_noisy_quadratic_argmax():
    z = np.linspace(-1, 1, 41)
    rng = np.random.default_rng(2)
    hits = [abs(local_quadratic_fit(z, -20 * z**2 + rng.normal(0, 0.5, z.size), span=0.6).argmax) < 0.05 for _ in range(20)]
    assert np.mean(hits) >= 0.9


def test_fisher_examples():
    z = np.linspace(-1, 1, 5)
    cond = np.column_stack([2 * z] * 4)
    info = fisher_information([cond], [z])
    assert info[0, 0] == pytest.approx(16.0) and standard_errors(info)[0] == pytest.approx(0.25)
    with pytest.raises(SingularInformationError, match="profile"):
        fisher_information([np.zeros((5, 4))], [z])
    c1 = np.column_stack([z] * 3)
    with pytest.raises(SingularInformationError):
        fisher_information([c1, c1], [z, z])


def test_fisher_matches_quadratic_curvature():
    # l_n(theta) = -(theta - m_n)^2 / 2 summed: slopes at 0 are m_n, so I = sum m_n^2 for one parameter
    rng = np.random.default_rng(0)
    m = rng.normal(size=(6, 2))
    z = np.linspace(-0.1, 0.1, 7)
    conds = [np.column_stack([-(z - m[n, i]) ** 2 / 2 for n in range(6)]) for i in range(2)]
    info = fisher_information(conds, [z, z])
    assert np.allclose(info, m.T @ m, atol=1e-10)
    assert np.array_equal(info, info.T)
    assert np.allclose(standard_errors(info), np.sqrt(np.diag(np.linalg.inv(m.T @ m))), atol=1e-6)


def test_profile_quadratic_and_regridding():
    f = lambda g: -((g - 0.4) ** 2) / (2 * 0.01)  # noqa: E731
    half = np.sqrt(chi2_quantile(0.99) * 0.01)
    coarse = profile_likelihood(f, np.linspace(0, 0.8, 17))
    fine = profile_likelihood(f, np.linspace(0, 0.8, 33))
    assert coarse.ci[0] == pytest.approx(0.4 - half, abs=1e-3)
    assert coarse.ci[1] == pytest.approx(0.4 + half, abs=1e-3)
    assert np.allclose(coarse.ci, fine.ci, atol=1e-3)
    assert coarse.ci[0] < coarse.maximizer < coarse.ci[1]


def test_profile_level_zero_collapses():
    grid = np.linspace(0, 0.8, 17)
    r = profile_from_values(grid, -((grid - 0.4) ** 2) / 0.02, level=0.0)
    assert r.ci[1] - r.ci[0] < 1e-3


def test_profile_missing_points():
    def f(g):
        if abs(g - 0.1) < 1e-9:
            raise ArithmeticError
        return -((g - 0.4) ** 2) / 0.02

    r = profile_likelihood(f, np.linspace(0, 0.8, 9))
    assert np.isnan(r.logliks[1]) and np.isfinite(r.ci).all()
