"""Likelihood maximisation by iterated filtering.

Each iteration runs the particle filter with parameters that follow a random
walk on the unconstrained scale.  Perturbation variances shrink
geometrically (factor `a` per iteration).  The filtered parameter means and
prediction variances collected along the series are combined into a
parameter update, and the initial state is re-estimated from the particle
ancestry at a fixed lag.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .data import ObservedSeries
from .exceptions import DegenerateVarianceError, FilteringFailureError, InvalidArgumentError
from .model import CompartmentModel, StateVector, check_params
from .rng import RngStream
from .simulate import EulerConfig
from .smc import PERTURB, FilterResult, _check_data, _run_filter
from .transforms import TransformSpec

__all__ = ["MifConfig", "MifResult", "mif_run", "mif_update", "fixed_lag_initial_update"]

#: relative floor on prediction variances before the update is declared degenerate
VARIANCE_FLOOR = 1e-12

# substream purposes at the start of each iteration
_INIT_STATE, _INIT_PARAMS = 0, 1


@dataclass
class MifConfig:
    """Algorithmic settings for :func:`mif_run`.

    ``sigma_theta`` holds random-walk standard deviations per unit time on
    the unconstrained scale; parameters absent from it (or with zero entry)
    are held fixed.  ``sigma_init`` holds standard deviations for initial
    compartment counts by name.
    """

    J: int
    M: int
    a: float
    theta_init: Mapping[str, float]
    x_init: object
    L: int = 1
    b: float = 1.0
    sigma_theta: Mapping[str, float] = field(default_factory=dict)
    sigma_init: Mapping[str, float] = field(default_factory=dict)
    transform: TransformSpec = field(default_factory=TransformSpec)
    resampler: str = "multinomial"

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 2:
            raise InvalidArgumentError(f"J must be an integer >= 2, got {self.J}")
        if int(self.M) != self.M or self.M < 1:
            raise InvalidArgumentError(f"M must be an integer >= 1, got {self.M}")
        if not 0 < self.a < 1:
            raise InvalidArgumentError(f"cooling factor a must lie in (0, 1), got {self.a}")
        if not self.b > 0:
            raise InvalidArgumentError(f"b must be > 0, got {self.b}")
        if int(self.L) != self.L or self.L < 1:
            raise InvalidArgumentError(f"lag L must be an integer >= 1, got {self.L}")
        self.J, self.M, self.L = int(self.J), int(self.M), int(self.L)
        self.theta_init = check_params(self.theta_init)
        for group, sds in (("sigma_theta", self.sigma_theta), ("sigma_init", self.sigma_init)):
            for k, v in sds.items():
                if not (np.isfinite(v) and v >= 0):
                    raise InvalidArgumentError(f"{group}[{k!r}] must be finite and >= 0, got {v}")
        unknown = set(self.sigma_theta) - set(self.theta_init)
        if unknown:
            raise InvalidArgumentError(f"sigma_theta names unknown parameters: {sorted(unknown)}")
        if not isinstance(self.transform, TransformSpec):
            self.transform = TransformSpec(self.transform)
        for name in self.estimated:
            self.transform.forward(name, self.theta_init[name])

    @property
    def estimated(self):
        return tuple(k for k in self.theta_init if self.sigma_theta.get(k, 0) > 0)


@dataclass
class MifResult:
    """Estimates and per-iteration traces.

    ``theta_trace[m]`` is the parameter vector used in iteration ``m + 1``
    and ``loglik_trace[m]`` the log likelihood estimated during it.
    ``perturbation_var[m]`` is the empirical variance of the initial
    parameter perturbations drawn in iteration ``m + 1``, per estimated
    parameter.
    """

    theta_hat: dict
    x_hat: np.ndarray
    param_names: tuple
    estimated: tuple
    theta_trace: np.ndarray
    loglik_trace: np.ndarray
    cond_loglik_trace: np.ndarray
    x_trace: np.ndarray
    perturbation_var: np.ndarray
    last_filter: FilterResult | None = field(default=None, repr=False)


def mif_update(theta_m, V, thetabar):
    """Combine filtered means into the next parameter value.

    ``theta + V[0] * sum_n (thetabar[n] - thetabar[n-1]) / V[n-1]`` with
    ``thetabar`` of length ``N + 1`` (``thetabar[0]`` the current value) and
    ``V`` of length ``N``.  Works elementwise on trailing parameter axes.
    """
    V = np.asarray(V, dtype=float)
    thetabar = np.asarray(thetabar, dtype=float)
    if thetabar.shape[0] != V.shape[0] + 1:
        raise InvalidArgumentError("thetabar needs one more entry than V")
    if np.any(~(V > 0)):
        raise DegenerateVarianceError("prediction variances must all be > 0")
    # summed by parts so that equal variances telescope to thetabar[-1] exactly
    w = V[0] / V
    inner = np.sum(np.diff(w, axis=0) * thetabar[1:-1], axis=0)
    return (theta_m - thetabar[0]) - inner + w[-1] * thetabar[-1]


def fixed_lag_initial_update(samples) -> np.ndarray:
    """Mean of the lagged initial-value ancestry, rounded half to even."""
    samples = np.asarray(samples, dtype=float)
    return np.rint(samples.mean(axis=0)).astype(np.int64)


class _Perturber:
    """Random-walk perturbation of parameters between observations."""

    def __init__(self, names, u, sds, transform, scale, stream, N):
        self.names = names
        self.u = u
        self.sds = sds
        self.transform = transform
        self.scale = scale
        self.stream = stream
        self.thetabar = np.empty((N + 1, len(names)))
        self.V = np.empty((N, len(names)))

    def __call__(self, n, k, theta, dt):
        theta = {name: v[k] for name, v in theta.items()}
        if not self.names:
            return theta
        gen = self.stream.derive(n, PERTURB).generator
        sd = self.sds * np.sqrt(self.scale * dt)
        J = k.size
        for i, name in enumerate(self.names):
            prev = self.u[name][k]
            self.thetabar[n + 1, i] = prev.mean()
            new = prev + sd[i] * gen.standard_normal(J)
            self.u[name] = new
            self.V[n, i] = new.var(ddof=1)
            theta[name] = self.transform.inverse(name, new)
        return theta


def mif_run(
    model: CompartmentModel,
    measurement,
    data: ObservedSeries,
    config: MifConfig,
    stream: RngStream,
    t0: float | None = None,
    euler: EulerConfig | None = None,
    workers: int = 1,
) -> MifResult:
    """Run `config.M` iterations of iterated filtering.

    Iteration ``m`` (1-based) draws from ``stream.derive(m - 1)``; with all
    perturbation variances zero and ``M == 1`` it consumes exactly the same
    random numbers as :func:`~stochcomp.smc.particle_filter`.

    Raises
    ------
    FilteringFailureError
        Carrying ``iteration``, the observation index ``n`` and the parameter
        vector in use.
    DegenerateVarianceError
        When the prediction variance of an estimated parameter collapses.
    """
    if euler is None:
        raise InvalidArgumentError("an EulerConfig is required")
    x_init = config.x_init
    if not isinstance(x_init, StateVector):
        x_init = StateVector(x_init, 0.0 if t0 is None else t0)
    t0 = x_init.time if t0 is None else float(t0)
    _check_data(model, data, t0)
    N = len(data)
    if config.L > N:
        raise InvalidArgumentError(f"lag L={config.L} exceeds the number of observations {N}")
    measurement = measurement.bind(model)
    J, M, a, b = config.J, config.M, config.a, config.b
    names = tuple(config.theta_init)
    est = config.estimated
    tf = config.transform
    sds = np.array([config.sigma_theta[k] for k in est], dtype=float)
    init_sd = np.array([config.sigma_init.get(c, 0.0) for c in model.compartments], dtype=float)
    unknown = set(config.sigma_init) - set(model.compartments)
    if unknown:
        raise InvalidArgumentError(f"sigma_init names unknown compartments: {sorted(unknown)}")

    theta_m = dict(config.theta_init)
    xi_m = x_init.counts.copy()
    theta_trace = np.empty((M, len(names)))
    x_trace = np.empty((M + 1, xi_m.size), dtype=np.int64)
    loglik = np.empty(M)
    cond = np.empty((M, N))
    pvar = np.full((M, len(est)), np.nan)
    result = None
    for m in range(M):
        scale = a**m
        it_stream = stream.derive(m)
        theta_trace[m] = [theta_m[k] for k in names]
        x_trace[m] = xi_m
        th = {k: np.full(J, float(v)) for k, v in theta_m.items()}

        XI = np.tile(xi_m, (J, 1))
        if np.any(init_sd > 0):
            g = it_stream.derive(N, _INIT_STATE).generator
            noise = g.standard_normal((J, xi_m.size)) * (init_sd * np.sqrt(scale))
            XI = np.maximum(np.rint(XI + noise), 0).astype(np.int64)
        XI = model.initialize(XI, th, t0)

        u = {}
        u_m = np.array([tf.forward(k, theta_m[k]) for k in est], dtype=float)
        if est:
            g = it_stream.derive(N, _INIT_PARAMS).generator
            draws = g.standard_normal((J, len(est))) * (sds * np.sqrt(b * scale))
            pvar[m] = draws.var(axis=0, ddof=1)
            for i, k in enumerate(est):
                u[k] = u_m[i] + draws[:, i]
                th[k] = tf.inverse(k, u[k])

        perturber = _Perturber(est, u, sds, tf, scale, it_stream, N)
        perturber.thetabar[0] = u_m
        try:
            result = _run_filter(
                model,
                measurement,
                data,
                t0,
                th,
                XI.copy(),
                XI,
                euler,
                it_stream,
                config.resampler,
                workers,
                perturber=perturber,
                lag=config.L,
            )
        except FilteringFailureError as exc:
            raise FilteringFailureError(
                f"iteration {m + 1}: {exc}", n=exc.n, theta=dict(theta_m), iteration=m + 1
            ) from exc
        loglik[m] = result.loglik
        cond[m] = result.cond_logliks

        if est:
            V = perturber.V
            floor = VARIANCE_FLOOR * V.mean(axis=0)
            if np.any(~(V > floor)):
                bad = [est[i] for i in range(len(est)) if np.any(~(V[:, i] > floor[i]))]
                raise DegenerateVarianceError(
                    f"iteration {m + 1}: prediction variance collapsed for {bad}; "
                    "increase J or the random-walk standard deviations"
                )
            u_next = mif_update(u_m, V, perturber.thetabar)
            theta_m = dict(theta_m)
            for i, k in enumerate(est):
                theta_m[k] = float(tf.inverse(k, u_next[i]))
        xi_m = fixed_lag_initial_update(result.x_lag)
    x_trace[M] = xi_m
    return MifResult(
        theta_hat=theta_m,
        x_hat=xi_m,
        param_names=names,
        estimated=est,
        theta_trace=theta_trace,
        loglik_trace=loglik,
        cond_loglik_trace=cond,
        x_trace=x_trace,
        perturbation_var=pvar,
        last_filter=result,
    )
