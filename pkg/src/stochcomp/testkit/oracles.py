"""Reference calculations: exact HMM likelihood, death-process moments,
one-step Monte Carlo tables."""

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass
class FiniteHmm:
    """Discrete-state hidden Markov model.

    ``transition[i, k]`` is P(state k at n+1 | state i at n).  ``emission(i, y)``
    returns the probability of observing `y` in state `i`.  The chain starts
    from `initial` one transition before the first observation.
    """

    transition: np.ndarray
    emission: Callable[[int, object], float]
    initial: np.ndarray

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=float)
        self.initial = np.asarray(self.initial, dtype=float)
        k = self.initial.size
        if self.transition.shape != (k, k):
            raise ValueError("transition matrix must be square and match the initial distribution")
        if np.any(self.transition < 0) or np.any(np.abs(self.transition.sum(axis=1) - 1) > 1e-12):
            raise ValueError("transition rows must be probability vectors")
        if np.any(self.initial < 0) or abs(self.initial.sum() - 1) > 1e-12:
            raise ValueError("initial distribution must sum to one")

    @property
    def n_states(self):
        return self.initial.size


def _log(p):
    return math.log(p) if p > 0 else -math.inf


def forward_loglik(hmm: FiniteHmm, observations: Sequence) -> float:
    """Exact log likelihood by the forward recursion, normalised at each step."""
    alpha = [float(v) for v in hmm.initial]
    k = hmm.n_states
    total = 0.0
    for y in observations:
        pred = [sum(alpha[i] * hmm.transition[i, j] for i in range(k)) for j in range(k)]
        joint = [pred[j] * hmm.emission(j, y) for j in range(k)]
        s = math.fsum(joint)
        if s <= 0:
            return -math.inf
        total += math.log(s)
        alpha = [v / s for v in joint]
    return total


def brute_force_loglik(hmm: FiniteHmm, observations: Sequence) -> float:
    """Sum over every hidden path; exponential cost, for cross-checks only."""
    import itertools

    k = hmm.n_states
    terms = []
    for x0 in range(k):
        for path in itertools.product(range(k), repeat=len(observations)):
            p = hmm.initial[x0]
            prev = x0
            for s, y in zip(path, observations):
                p *= hmm.transition[prev, s] * hmm.emission(s, y)
                prev = s
            terms.append(p)
    return _log(math.fsum(terms))


def death_process_moments(x0, mu, t):
    """Mean and variance of a linear death process: binomial survivors."""
    if x0 < 0 or mu < 0:
        raise ValueError("need x0 >= 0 and mu >= 0")
    p = math.exp(-mu * t)
    return x0 * p, x0 * p * (1 - p)


def enumerate_one_step(x, mu, sigma2, delta, mc_draws, rng=None):
    """Monte Carlo table of transitions out of one compartment in one step.

    Individuals leave to a single destination at per-capita rate `mu`
    multiplied by gamma white noise of variance `sigma2`.  Draws are made
    one scalar at a time straight from the definition: a gamma increment,
    then a binomial count.

    Returns ``(counts, freq, se)`` for outcomes ``0..x``.
    """
    if x < 0 or x > 20:
        raise ValueError("x must lie in 0..20")
    rng = np.random.default_rng(rng)
    if sigma2 > 0:
        shape = delta / sigma2
        dG = rng.gamma(shape, sigma2, size=mc_draws)
    else:
        dG = np.full(mc_draws, float(delta))
    p = 1.0 - np.exp(-mu * dG)
    n = rng.binomial(x, p)
    counts = np.bincount(n, minlength=x + 1).astype(float)
    freq = counts / mc_draws
    se = np.sqrt(freq * (1 - freq) / mc_draws)
    return np.arange(x + 1), freq, se
