import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochcomp import GammaNoiseSpec, InvalidArgumentError, RngStream, derive_stream, gamma_increment, multinomial_draw
from stochcomp.rng import PROB_SUM_TOL, gamma_increments


def test_stream_identity_and_distinctness():
    a = RngStream(7).derive(0, 1).generator.integers(0, 2**63, 4)
    b = derive_stream(RngStream(7), (0, 1)).generator.integers(0, 2**63, 4)
    c = RngStream(7).derive(0, 2).generator.integers(0, 2**63, 4)
    d = RngStream(8).derive(0, 1).generator.integers(0, 2**63, 4)
    assert np.array_equal(a, b)
    assert a[0] != c[0]
    assert a[0] != d[0]


def test_stream_equality_and_fresh():
    s = RngStream(3, (1, 2))
    assert s == RngStream(3).derive(1, 2)
    assert hash(s) == hash(RngStream(3, (1, 2)))
    x = s.generator.random()
    assert s.fresh().generator.random() == x


@pytest.mark.parametrize("seed", [-1, 2**64, 1.5])
def test_stream_rejects_bad_seed(seed):
    with pytest.raises(InvalidArgumentError):
        RngStream(seed)


def test_gamma_degenerate_is_exact():
    assert gamma_increment(GammaNoiseSpec(0.0), 0.01, RngStream(1)) == 0.01
    g = gamma_increments(np.zeros(5), 0.25, RngStream(1).generator, size=5)
    assert np.all(g == 0.25)


def test_gamma_rejects_bad_inputs():
    with pytest.raises(InvalidArgumentError):
        gamma_increment(GammaNoiseSpec(1.0), 0.0, RngStream(1))
    with pytest.raises(InvalidArgumentError):
        GammaNoiseSpec(-0.1)


@pytest.mark.parametrize("sigma2,delta", [(0.01, 0.01), (0.25, 0.01), (1.0, 0.01), (0.25, 2.0)])
def test_gamma_moments(sigma2, delta):
    n = 10**6
    g = gamma_increments(sigma2, delta, RngStream(11).generator, size=n)
    var = delta * sigma2
    assert abs(g.mean() - delta) < 4 * np.sqrt(var / n)
    # standard error of the sample variance of a gamma: var * sqrt((kurt + 2) / n)
    shape = delta / sigma2
    se_var = var * np.sqrt((6 / shape + 2) / n)
    assert abs(g.var() - var) < 4 * se_var


def test_gamma_small_shape_is_positive_and_finite():
    g = gamma_increments(1.0, 1.0 / 365, RngStream(2).generator, size=10**5)
    assert np.all(np.isfinite(g)) and np.all(g >= 0)


def test_multinomial_examples():
    counts, rem = multinomial_draw(5, [1.0], RngStream(1))
    assert counts.tolist() == [5] and rem == 0
    counts, rem = multinomial_draw(0, [0.3, 0.2], RngStream(1))
    assert counts.tolist() == [0, 0] and rem == 0


def test_multinomial_binomial_marginals():
    n = 10**6
    counts, rem = multinomial_draw(n, [0.2, 0.3], RngStream(5))
    for c, p in zip(counts, (0.2, 0.3)):
        assert abs(c - n * p) < 3 * np.sqrt(n * p * (1 - p))
    assert counts.sum() + rem == n


def test_multinomial_tolerance_and_errors():
    counts, rem = multinomial_draw(10, [0.5, 0.5 + PROB_SUM_TOL / 2], RngStream(1))
    assert counts.sum() + rem == 10
    with pytest.raises(InvalidArgumentError):
        multinomial_draw(10, [0.5, 0.6], RngStream(1))
    with pytest.raises(InvalidArgumentError):
        multinomial_draw(10, [-0.1, 0.5], RngStream(1))


@settings(max_examples=200, deadline=None)
@given(
    size=st.integers(0, 10**6),
    probs=st.lists(st.floats(0, 1), min_size=1, max_size=5),
    seed=st.integers(0, 2**32),
)
def test_multinomial_conserves_size(size, probs, seed):
    probs = np.array(probs)
    if probs.sum() > 1:
        probs = probs / probs.sum() * (1 - 1e-15)
    counts, rem = multinomial_draw(size, probs, RngStream(seed))
    assert counts.sum() + rem == size
    assert np.all(counts >= 0) and rem >= 0
