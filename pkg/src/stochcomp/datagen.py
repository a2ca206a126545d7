"""Synthetic observation series simulated from a model."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .data import ObservedSeries
from .exceptions import InvalidArgumentError
from .model import CompartmentModel, StateVector
from .rng import RngStream
from .simulate import EulerConfig, PathRecord, simulate_path

__all__ = ["simulate_observations", "simulate_data"]


def simulate_observations(path: PathRecord, model: CompartmentModel, measurement, theta, stream: RngStream):
    """Draw observations at ``path.times[1:]`` from the flow increments of `path`.

    The first recorded time is taken as the start of the first interval.
    Returns an ``(N, channels)`` integer-valued float array.
    """
    m = measurement.bind(model)
    if len(path.times) < 2:
        raise InvalidArgumentError("path needs at least two recorded times")
    dN = np.diff(path.flows, axis=0)
    th = {k: np.full(dN.shape[0], float(v)) for k, v in theta.items()}
    return m.sample(path.states[1:], dN, th, path.times[1:], stream.generator).astype(float)


def simulate_data(
    model: CompartmentModel,
    measurement,
    theta: Mapping[str, float],
    x0: StateVector,
    times,
    config: EulerConfig,
    stream: RngStream,
):
    """Simulate a latent path and observations at `times` (all after ``x0.time``).

    Returns ``(ObservedSeries, PathRecord)``; the path includes the start.
    """
    times = np.asarray(times, dtype=float)
    if times[0] <= x0.time:
        raise InvalidArgumentError("observation times must follow the initial time")
    grid = np.concatenate([[x0.time], times])
    path = simulate_path(model, x0, theta, grid, config, stream.derive(0))
    y = simulate_observations(path, model, measurement, theta, stream.derive(1))
    return ObservedSeries(times, y, measurement.channels), path
