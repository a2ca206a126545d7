import ast
import math
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import poisson

from stochcomp.testkit import (
    FiniteHmm,
    brute_force_loglik,
    death_process_moments,
    enumerate_one_step,
    forward_loglik,
)


def _pois_hmm(P, lam, init):
    return FiniteHmm(np.array(P), lambda i, y: poisson.pmf(y, lam[i]), np.array(init))


def test_one_state():
    h = _pois_hmm([[1.0]], [3.0], [1.0])
    ys = [1, 4, 2]
    assert forward_loglik(h, ys) == pytest.approx(sum(poisson.logpmf(y, 3.0) for y in ys), abs=1e-12)


def test_forward_matches_enumeration():
    h = _pois_hmm([[0.7, 0.3], [0.3, 0.7]], [1.0, 6.0], [0.5, 0.5])
    ys = [0, 5, 7]
    assert forward_loglik(h, ys) == pytest.approx(brute_force_loglik(h, ys), abs=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(5):
        P = rng.dirichlet(np.ones(3), size=3)
        h = _pois_hmm(P, [0.5, 3.0, 9.0], rng.dirichlet(np.ones(3)))
        ys = rng.integers(0, 10, size=6).tolist()
        assert forward_loglik(h, ys) == pytest.approx(brute_force_loglik(h, ys), abs=1e-10)


def test_impossible_observation():
    h = FiniteHmm(np.eye(2), lambda i, y: float(y == i), np.array([1.0, 0.0]))
    assert forward_loglik(h, [0, 1]) == -math.inf
    assert brute_force_loglik(h, [0, 1]) == -math.inf


def test_hmm_validation():
    with pytest.raises(ValueError):
        FiniteHmm(np.array([[0.5, 0.6], [0.5, 0.5]]), lambda i, y: 1.0, np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        FiniteHmm(np.eye(2), lambda i, y: 1.0, np.array([0.5, 0.6]))


def test_death_moments():
    assert death_process_moments(50, 2.0, 0.0) == (50, 0)
    assert death_process_moments(50, 0.0, 3.0) == (50, 0)
    m, v = death_process_moments(100, 1.0, 1.0)
    assert m == pytest.approx(36.788, abs=1e-3) and v == pytest.approx(23.254, abs=1e-3)


def test_enumerate_one_step():
    x, mu, delta = 10, 1.0, 1e-3
    n, f, se = enumerate_one_step(x, mu, 0.0, delta, 200000, rng=1)
    assert abs(f[1] - mu * x * delta) < 4 * se[1] + 1e-4
    n, f, se = enumerate_one_step(x, 2.0, 1.0, 0.05, 200000, rng=2)
    mean = np.sum(n * f)
    var = np.sum(n**2 * f) - mean**2
    assert var / mean > 1.05
    n, f, se = enumerate_one_step(0, 2.0, 1.0, 0.05, 1000, rng=3)
    assert f.tolist() == [1.0]
    with pytest.raises(ValueError):
        enumerate_one_step(21, 1.0, 0.0, 0.1, 10)


def test_testkit_is_independent():
    root = Path(__file__).resolve().parents[1] / "src" / "stochcomp" / "testkit"
    for f in root.glob("*.py"):
        for node in ast.walk(ast.parse(f.read_text())):
            if isinstance(node, ast.ImportFrom):
                assert node.level == 0 or node.module in (None, "oracles") and node.level == 1, f
                assert not (node.module or "").startswith("stochcomp"), f
            elif isinstance(node, ast.Import):
                assert not any(a.name.startswith("stochcomp") for a in node.names), f
