"""Compartment models with noisy per-capita transition rates.

A :class:`CompartmentModel` is a list of compartments, a list of
:class:`FlowSpec` transitions between them, the gamma noise processes those
transitions are multiplied by, and optional scheduled (noise-free,
covariate-driven) inflows such as birth recruitment.

Rate functions are vectorised over particles.  They are called as
``rate(t, x, theta, cov)`` where ``x`` maps compartment names to integer
arrays of shape ``(J,)``, ``theta`` maps parameter names to float arrays of
shape ``(J,)`` and ``cov`` maps covariate names to floats evaluated at ``t``.
They return a per-capita rate (1/time) broadcastable to ``(J,)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .covariates import CovariateTable
from .exceptions import InvalidArgumentError, ModelEvaluationError

__all__ = [
    "FlowSpec",
    "NoiseProcess",
    "ScheduledInflow",
    "CompartmentModel",
    "StateVector",
    "FlowCounts",
    "check_params",
    "eval_rates",
]

RateFn = Callable[..., object]


@dataclass(frozen=True)
class FlowSpec:
    """Transition ``source -> dest`` at per-capita `rate`.

    `noise` names a :class:`NoiseProcess` of the model; several flows may
    share one process.  ``None`` means noise-free.
    """

    source: str
    dest: str
    rate: RateFn
    noise: str | None = None

    @property
    def key(self):
        return (self.source, self.dest)

    @property
    def label(self):
        return f"{self.source}->{self.dest}"


@dataclass(frozen=True)
class NoiseProcess:
    """Gamma white noise; `sigma2` is a parameter name or a constant."""

    name: str
    sigma2: str | float

    def variance(self, theta: Mapping[str, object]):
        if isinstance(self.sigma2, str):
            return theta[self.sigma2]
        return float(self.sigma2)


@dataclass(frozen=True)
class ScheduledInflow:
    """Deterministic recruitment into `dest`.

    `cumulative(t)` is the expected number recruited between the model's
    time origin and ``t``; the realised count over ``[s, t]`` is
    ``floor(cumulative(t)) - floor(cumulative(s))``.  The `source`
    compartment is bookkeeping only and is never debited.
    """

    source: str
    dest: str
    cumulative: Callable[[float], float]

    @property
    def key(self):
        return (self.source, self.dest)

    @property
    def label(self):
        return f"{self.source}->{self.dest}"


@dataclass
class StateVector:
    counts: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1:
            raise InvalidArgumentError("state counts must be a 1-d vector")
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(np.mod(counts, 1) == 0):
                raise InvalidArgumentError("state counts must be integers")
        counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise InvalidArgumentError(f"state counts must be >= 0, got {counts}")
        self.counts = counts
        self.time = float(self.time)


@dataclass
class FlowCounts:
    """Cumulative transition counts, one column per flow then per inflow."""

    labels: tuple
    cumulative: np.ndarray


def check_params(theta: Mapping[str, float]) -> dict:
    """Validate a named parameter vector: string keys, finite values."""
    out = {}
    for name, v in theta.items():
        if not isinstance(name, str):
            raise InvalidArgumentError(f"parameter names must be strings, got {name!r}")
        arr = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError(f"parameter {name!r} is not finite: {v}")
        out[name] = float(arr) if arr.ndim == 0 else arr
    return out


class CompartmentModel:
    """Immutable description of a compartment model.

    Parameters
    ----------
    compartments : sequence of str
        Ordered compartment names, including any source/sink compartments.
    flows : sequence of FlowSpec
        Noisy rate-driven transitions; at most one per ordered pair.
    noises : sequence of NoiseProcess
        Noise processes referenced by the flows.
    inflows : sequence of ScheduledInflow
        Deterministic recruitment schedules.
    covariates : CovariateTable, optional
        Interpolated covariates handed to rate functions.
    initializer : callable, optional
        ``initializer(X, theta, cov) -> X`` applied to initial states of shape
        ``(J, c)``, e.g. to set a compartment residually from a population
        size covariate.
    autonomous : bool
        Declares that no rate depends on time or covariates, which makes the
        model eligible for exact simulation without rate bounds.
    """

    def __init__(
        self,
        compartments: Sequence[str],
        flows: Sequence[FlowSpec],
        noises: Sequence[NoiseProcess] = (),
        inflows: Sequence[ScheduledInflow] = (),
        covariates: CovariateTable | None = None,
        initializer=None,
        autonomous: bool = False,
        name: str = "model",
    ):
        compartments = tuple(str(c) for c in compartments)
        if len(set(compartments)) != len(compartments):
            raise InvalidArgumentError("compartment names must be unique")
        index = {c: k for k, c in enumerate(compartments)}
        noise_names = [n.name for n in noises]
        if len(set(noise_names)) != len(noise_names):
            raise InvalidArgumentError("noise process names must be unique")
        seen = set()
        for f in list(flows) + list(inflows):
            for end in (f.source, f.dest):
                if end not in index:
                    raise InvalidArgumentError(f"flow {f.label} references unknown compartment {end!r}")
            if f.source == f.dest:
                raise InvalidArgumentError(f"flow {f.label} must join distinct compartments")
            if f.key in seen:
                raise InvalidArgumentError(f"duplicate flow {f.label}")
            seen.add(f.key)
        for f in flows:
            if f.noise is not None and f.noise not in noise_names:
                raise InvalidArgumentError(f"flow {f.label} references unknown noise {f.noise!r}")
        self.name = name
        self.compartments = compartments
        self.index = index
        self.flows = tuple(flows)
        self.noises = tuple(noises)
        self.inflows = tuple(inflows)
        self.covariates = covariates
        self.initializer = initializer
        self.autonomous = bool(autonomous)

        self._flow_src = np.array([index[f.source] for f in self.flows], dtype=np.intp)
        self._flow_dst = np.array([index[f.dest] for f in self.flows], dtype=np.intp)
        self._inflow_dst = np.array([index[g.dest] for g in self.inflows], dtype=np.intp)
        noise_pos = {n: k for k, n in enumerate(noise_names)}
        self._flow_noise = [noise_pos.get(f.noise) for f in self.flows]
        # flows grouped by source compartment, in declaration order
        groups = {}
        for k, f in enumerate(self.flows):
            groups.setdefault(index[f.source], []).append(k)
        self._groups = [(src, np.array(ks, dtype=np.intp)) for src, ks in sorted(groups.items())]

    def __repr__(self):
        return (
            f"CompartmentModel({self.name!r}, compartments={list(self.compartments)}, "
            f"flows={[f.label for f in self.flows]})"
        )

    @property
    def n_compartments(self):
        return len(self.compartments)

    @property
    def flow_labels(self):
        return tuple(f.label for f in self.flows) + tuple(g.label for g in self.inflows)

    def flow_column(self, source: str, dest: str) -> int:
        """Column of ``source -> dest`` in flow-count arrays."""
        for k, f in enumerate(self.flows):
            if f.key == (source, dest):
                return k
        for k, g in enumerate(self.inflows):
            if g.key == (source, dest):
                return len(self.flows) + k
        raise KeyError(f"no flow {source}->{dest} in {self.name}")

    def covariates_at(self, t: float) -> dict:
        if self.covariates is None:
            return {}
        return self.covariates.at(t)

    def is_poisson_system(self, theta: Mapping[str, object]) -> bool:
        """True when every flow is noise-free at `theta`."""
        for f, pos in zip(self.flows, self._flow_noise):
            if pos is None:
                continue
            if np.any(np.asarray(self.noises[pos].variance(theta)) != 0):
                return False
        return True

    def state_view(self, X: np.ndarray) -> dict:
        return {c: X[..., k] for k, c in enumerate(self.compartments)}

    def initialize(self, X: np.ndarray, theta, t0: float) -> np.ndarray:
        if self.initializer is None:
            return X
        X = np.asarray(self.initializer(X.copy(), theta, self.covariates_at(t0)), dtype=np.int64)
        if np.any(X < 0):
            raise ModelEvaluationError("initializer produced negative counts")
        return X

    def flow_rates(self, t: float, X: np.ndarray, theta: Mapping[str, object], cov=None) -> np.ndarray:
        """Per-capita rates of every flow, shape ``X.shape[:-1] + (F,)``."""
        if cov is None:
            cov = self.covariates_at(t)
        x = self.state_view(X)
        shape = X.shape[:-1]
        out = np.empty(shape + (len(self.flows),))
        for k, f in enumerate(self.flows):
            try:
                r = f.rate(t, x, theta, cov)
            except (ArithmeticError, ValueError) as exc:
                raise ModelEvaluationError(f"rate of flow {f.label} failed at t={t}: {exc}") from exc
            r = np.broadcast_to(np.asarray(r, dtype=float), shape)
            if np.any(~np.isfinite(r)) or np.any(r < 0):
                bad = r[~(np.isfinite(r) & (r >= 0))]
                raise ModelEvaluationError(
                    f"rate of flow {f.label} is invalid at t={t}: {bad.ravel()[:3]}"
                )
            out[..., k] = r
        return out

    def check_conservation(self, X0, X, counts) -> bool:
        """Exact integer check of the mass-balance identity."""
        X0 = np.asarray(X0, dtype=np.int64)
        X = np.asarray(X, dtype=np.int64)
        counts = np.asarray(counts, dtype=np.int64)
        F = len(self.flows)
        expected = np.array(X0, copy=True)
        expected = np.broadcast_to(expected, X.shape).copy()
        for k in range(F):
            expected[..., self._flow_dst[k]] += counts[..., k]
            expected[..., self._flow_src[k]] -= counts[..., k]
        for g, dst in enumerate(self._inflow_dst):
            expected[..., dst] += counts[..., F + g]
        return bool(np.array_equal(expected, X))


def eval_rates(model: CompartmentModel, t: float, x, theta: Mapping[str, float]) -> np.ndarray:
    """Rate matrix ``mu[i, j]`` for a single state; zero where no flow exists."""
    counts = x.counts if isinstance(x, StateVector) else np.asarray(x, dtype=np.int64)
    theta = {k: np.asarray(v, dtype=float) for k, v in theta.items()}
    rates = model.flow_rates(t, counts[None, :], {k: v[None] if v.ndim == 0 else v for k, v in theta.items()})[0]
    c = model.n_compartments
    mat = np.zeros((c, c))
    for k in range(len(model.flows)):
        mat[model._flow_src[k], model._flow_dst[k]] = rates[k]
    return mat
