"""Bootstrap particle filter.

Particles are propagated with the Euler-multinomial simulator between
observation times, weighted by the measurement density and resampled at
every observation.  The filtering loop is shared with iterated filtering
(:mod:`stochcomp.mif`), which plugs parameter perturbations into it.

Random numbers are drawn from substreams of the supplied stream:
``(n, 0, b)`` for the dynamics of particle block ``b`` over interval ``n``,
``(n, 1)`` for resampling at ``n`` and ``(n, 2)`` for parameter perturbation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .data import ObservedSeries
from .exceptions import FilteringFailureError, InvalidArgumentError
from .model import CompartmentModel, StateVector, check_params
from .rng import RngStream
from .simulate import EulerConfig, _blocks, propagate

__all__ = [
    "FilterResult",
    "particle_filter",
    "resample_multinomial",
    "resample_systematic",
    "effective_sample_size",
    "RESAMPLERS",
]

DYNAMICS, RESAMPLE, PERTURB = 0, 1, 2


def _check_weights(weights):
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise InvalidArgumentError("weights must be a nonempty 1-d array")
    if np.any(w < 0) or np.any(np.isnan(w)):
        raise InvalidArgumentError("weights must be nonnegative")
    if not w.sum() > 0:
        raise FilteringFailureError("total particle weight is zero")
    return w


def _draw_indices(w, u):
    cs = np.cumsum(w)
    idx = np.searchsorted(cs, u * cs[-1], side="right")
    return np.minimum(idx, w.size - 1)


def resample_multinomial(weights, stream: RngStream, size: int | None = None) -> np.ndarray:
    """Indices drawn i.i.d. with probabilities proportional to `weights`."""
    w = _check_weights(weights)
    size = w.size if size is None else int(size)
    return _draw_indices(w, stream.generator.random(size))


def resample_systematic(weights, stream: RngStream, size: int | None = None) -> np.ndarray:
    """Systematic resampling: one uniform shared by evenly spaced points."""
    w = _check_weights(weights)
    size = w.size if size is None else int(size)
    u = (stream.generator.random() + np.arange(size)) / size
    return _draw_indices(w, u)


RESAMPLERS = {"multinomial": resample_multinomial, "systematic": resample_systematic}


def effective_sample_size(weights) -> float:
    w = np.asarray(weights, dtype=float)
    s = w.sum()
    if not s > 0:
        raise InvalidArgumentError("effective sample size needs a positive total weight")
    return float(s * s / np.dot(w, w))


@dataclass
class FilterResult:
    """Output of one filtering pass.

    ``cond_logliks[n]`` is ``log(mean_j w(n, j))``; ``loglik`` is their sum.
    ``filter_means[n]`` are weighted state means before resampling.
    """

    times: np.ndarray
    loglik: float
    cond_logliks: np.ndarray
    ess: np.ndarray
    filter_means: np.ndarray
    compartments: tuple
    n_particles: int
    x_lag: np.ndarray | None = field(default=None, repr=False)


def _resolve_resampler(resampler):
    if callable(resampler):
        return resampler
    try:
        return RESAMPLERS[resampler]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown resampler {resampler!r}; choose from {sorted(RESAMPLERS)}"
        ) from None


def _run_filter(
    model: CompartmentModel,
    measurement,
    data: ObservedSeries,
    t0: float,
    theta: dict,
    X: np.ndarray,
    XI: np.ndarray,
    config: EulerConfig,
    stream: RngStream,
    resampler="multinomial",
    workers: int = 1,
    perturber=None,
    lag: int | None = None,
) -> FilterResult:
    """Filtering loop over all observations.

    `theta` maps names to per-particle arrays; `XI` is the initial-value
    memory carried along the ancestry.  `perturber`, when given, is called
    after each resampling as ``perturber(n, k, theta, dt)`` and returns the
    parameters to use over the next interval.
    """
    resample = _resolve_resampler(resampler)
    J = X.shape[0]
    N = len(data)
    nblocks = len(_blocks(J))
    cond = np.empty(N)
    ess = np.empty(N)
    means = np.empty((N, X.shape[1]))
    x_lag = None
    t_prev = float(t0)
    for n in range(N):
        t_n = float(data.times[n])
        streams = [stream.derive(n, DYNAMICS, b) for b in range(nblocks)]
        XP, dN = propagate(model, X, t_prev, t_n, theta, config, streams, workers)
        logw = np.asarray(measurement.logdensity(data.values[n], XP, dN, theta, t_n), dtype=float)
        logw = np.where(np.isnan(logw), -np.inf, logw)
        top = logw.max()
        if not np.isfinite(top):
            raise FilteringFailureError(
                f"all {J} particles have zero likelihood at observation {n + 1} (t={t_n}); "
                "try more particles or different parameters",
                n=n + 1,
            )
        w = np.exp(logw - top)
        cond[n] = top + np.log(w.mean())
        ess[n] = effective_sample_size(w)
        means[n] = w @ XP / w.sum()
        k = resample(w, stream.derive(n, RESAMPLE))
        X = XP[k]
        XI = XI[k]
        if perturber is None:
            theta = {name: v[k] for name, v in theta.items()}
        else:
            theta = perturber(n, k, theta, t_n - t_prev)
        if lag is not None and n + 1 == lag:
            x_lag = XI.copy()
        t_prev = t_n
    return FilterResult(
        times=data.times.copy(),
        loglik=float(cond.sum()),
        cond_logliks=cond,
        ess=ess,
        filter_means=means,
        compartments=model.compartments,
        n_particles=J,
        x_lag=x_lag,
    )


def _check_data(model, data, t0):
    if t0 >= data.times[0]:
        raise InvalidArgumentError(f"initial time {t0} must precede the first observation {data.times[0]}")
    if model.covariates is not None:
        lo, hi = model.covariates.span
        if t0 < lo - 1e-9 or data.times[-1] > hi + 1e-9:
            raise InvalidArgumentError(
                f"data span [{t0}, {data.times[-1]}] exceeds covariate span [{lo}, {hi}]"
            )


def particle_filter(
    model: CompartmentModel,
    measurement,
    data: ObservedSeries,
    theta: Mapping[str, float],
    x0,
    J: int,
    config: EulerConfig,
    stream: RngStream,
    resampler="multinomial",
    t0: float | None = None,
    workers: int = 1,
) -> FilterResult:
    """Estimate the log likelihood of `data` at `theta`.

    Parameters
    ----------
    model, measurement
        Latent process and observation model.
    data : ObservedSeries
        Observations at times after the initial time.
    theta : mapping
        Parameter values shared by all particles.
    x0 : StateVector or array
        Initial state; its ``time`` is the initial time unless `t0` is given.
    J : int
        Number of particles (>= 2).
    config : EulerConfig
    stream : RngStream
        Root stream; the filter draws from ``stream.derive(0, ...)`` so that a
        one-iteration unperturbed iterated filter reproduces it exactly.
    resampler : {"multinomial", "systematic"}
    workers : int
        Threads used to propagate particle blocks; results do not depend on it.

    Raises
    ------
    FilteringFailureError
        If every particle has zero weight at some observation.
    """
    if int(J) != J or J < 2:
        raise InvalidArgumentError(f"J must be an integer >= 2, got {J}")
    J = int(J)
    if not isinstance(x0, StateVector):
        x0 = StateVector(x0, 0.0 if t0 is None else t0)
    t0 = x0.time if t0 is None else float(t0)
    _check_data(model, data, t0)
    measurement = measurement.bind(model)
    theta = check_params(theta)
    th = {k: np.full(J, float(v)) for k, v in theta.items()}
    X = model.initialize(np.tile(x0.counts, (J, 1)), th, t0)
    return _run_filter(
        model, measurement, data, t0, th, X, X.copy(), config, stream.derive(0), resampler, workers
    )
