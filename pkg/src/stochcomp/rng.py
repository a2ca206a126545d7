"""Reproducible random streams and the samplers built on them.

Streams are counter based: a stream is identified by a root ``seed`` and a
``path`` of nonnegative integers (replicate, particle block, time step,
purpose, ...).  The path is fed to :class:`numpy.random.SeedSequence` as its
spawn key and drives a Philox generator, so a child stream depends only on
``(seed, path)`` and never on the order in which other streams were used.
That is what makes per-particle-block parallelism independent of the number
of worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidArgumentError

__all__ = [
    "RngStream",
    "GammaNoiseSpec",
    "derive_stream",
    "gamma_increment",
    "gamma_increments",
    "multinomial_draw",
    "sequential_multinomial",
    "PROB_SUM_TOL",
]

#: tolerance on ``sum(probs) - 1`` before a probability vector is rejected
PROB_SUM_TOL = 1e-12

_MAX_SEED = 2**64


class RngStream:
    """A substream identified by ``(seed, path)``.

    The underlying generator is created lazily and then advanced by every
    draw, so a single instance behaves like an ordinary generator.  Do not
    share one instance between workers; derive a child per worker instead.
    """

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, path=()):
        if isinstance(seed, bool) or int(seed) != seed:
            raise InvalidArgumentError(f"seed must be an integer, got {seed!r}")
        seed = int(seed)
        if not 0 <= seed < _MAX_SEED:
            raise InvalidArgumentError(f"seed must be a 64-bit nonnegative integer, got {seed}")
        path = tuple(int(i) for i in path)
        if any(i < 0 for i in path):
            raise InvalidArgumentError(f"stream path indices must be nonnegative, got {path}")
        self.seed = seed
        self.path = path
        self._gen = None

    def __repr__(self):
        return f"RngStream(seed={self.seed}, path={self.path})"

    def __eq__(self, other):
        return isinstance(other, RngStream) and (self.seed, self.path) == (other.seed, other.path)

    def __hash__(self):
        return hash((self.seed, self.path))

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen

    def derive(self, *indices) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(indices))

    def fresh(self) -> "RngStream":
        """A new instance positioned at the start of this stream."""
        return RngStream(self.seed, self.path)


def derive_stream(root: RngStream, indices) -> RngStream:
    """Child of `root` extended by `indices`; a pure function of both."""
    if isinstance(indices, (int, np.integer)):
        indices = (indices,)
    return root.derive(*indices)


@dataclass(frozen=True)
class GammaNoiseSpec:
    """Multiplicative gamma white noise with infinitesimal variance `sigma2`.

    ``sigma2 == 0`` is the degenerate noise whose integrated increments equal
    the elapsed time exactly.
    """

    sigma2: float = 0.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if not np.isfinite(self.sigma2) or self.sigma2 < 0:
            raise InvalidArgumentError(f"sigma2 must be finite and >= 0, got {self.sigma2}")


def gamma_increment(spec: GammaNoiseSpec, delta: float, stream: RngStream) -> float:
    """Draw an integrated-noise increment over an interval of length `delta`.

    Returns `delta` itself for degenerate noise, otherwise a draw from
    ``Gamma(shape=delta / sigma2, scale=sigma2)`` (mean `delta`, variance
    ``delta * sigma2``).
    """
    if not delta > 0:
        raise InvalidArgumentError(f"delta must be > 0, got {delta}")
    if spec.sigma2 == 0:
        return float(delta)
    return float(stream.generator.gamma(delta / spec.sigma2, spec.sigma2))


def gamma_increments(sigma2, delta: float, gen: np.random.Generator, size=None) -> np.ndarray:
    """Vectorised :func:`gamma_increment` for an array of variances.

    Entries with ``sigma2 == 0`` are exactly `delta`; no draw is consumed for
    them when every entry is degenerate.
    """
    sigma2 = np.asarray(sigma2, dtype=float)
    if size is not None:
        sigma2 = np.broadcast_to(sigma2, size)
    degenerate = sigma2 == 0
    if degenerate.all():
        return np.full(sigma2.shape, float(delta))
    safe = np.where(degenerate, 1.0, sigma2)
    draws = gen.gamma(delta / safe, safe)
    return np.where(degenerate, float(delta), draws)


def _check_probs(probs: np.ndarray) -> np.ndarray:
    if np.any(probs < 0) or np.any(~np.isfinite(probs)):
        raise InvalidArgumentError("probabilities must be finite and nonnegative")
    if np.any(probs > 1):
        raise InvalidArgumentError("each probability must be <= 1")
    total = probs.sum(axis=-1)
    if np.any(total > 1 + PROB_SUM_TOL):
        raise InvalidArgumentError(f"probabilities sum to {np.max(total)!r} > 1")
    return probs


def sequential_multinomial(size, probs, gen: np.random.Generator) -> np.ndarray:
    """Multinomial counts by conditional binomials, vectorised over rows.

    ``size`` has shape ``(J,)`` and ``probs`` shape ``(J, k)``; the implied
    last category (staying put) receives the remainder.  Returns ``(J, k)``
    integer counts.
    """
    size = np.asarray(size, dtype=np.int64)
    probs = np.asarray(probs, dtype=float)
    k = probs.shape[-1]
    out = np.zeros(probs.shape, dtype=np.int64)
    remaining = size.copy()
    left = np.ones(size.shape)
    for col in range(k):
        p = probs[..., col]
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(left > 0, p / left, 0.0)
        q = np.clip(q, 0.0, 1.0)
        draw = gen.binomial(remaining, q)
        out[..., col] = draw
        remaining = remaining - draw
        left = left - p
    return out


def multinomial_draw(size: int, probs, stream: RngStream):
    """Draw ``(counts, remainder)`` from a multinomial with an implicit last cell.

    `probs` may sum to less than one; the shortfall is the probability of the
    remainder cell.  Sums above one by no more than :data:`PROB_SUM_TOL` are
    clamped.
    """
    size = int(size)
    if size < 0:
        raise InvalidArgumentError(f"size must be >= 0, got {size}")
    probs = _check_probs(np.atleast_1d(np.asarray(probs, dtype=float)))
    total = probs.sum()
    if total > 1:
        probs = probs / total
    if size == 0:
        return np.zeros(probs.shape, dtype=np.int64), 0
    counts = sequential_multinomial(np.array([size]), probs[None, :], stream.generator)[0]
    return counts, size - int(counts.sum())
