"""Input coercion helpers shared by the estimator wrappers."""

from __future__ import annotations

import numpy as np

from .data import ObservedSeries
from .exceptions import InvalidArgumentError
from .rng import RngStream


def check_series(X, names=None) -> ObservedSeries:
    """Accept an :class:`ObservedSeries` or an array whose first column is time."""
    if isinstance(X, ObservedSeries):
        return X
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise InvalidArgumentError("expected an (N, 1 + channels) array with time in the first column")
    k = arr.shape[1] - 1
    names = tuple(names) if names is not None else (("cases",) if k == 1 else tuple(f"y{i + 1}" for i in range(k)))
    return ObservedSeries(arr[:, 0], arr[:, 1:], names)


def check_stream(seed) -> RngStream:
    """An :class:`RngStream` from a stream, an integer seed or ``None`` (seed 0)."""
    if isinstance(seed, RngStream):
        return seed
    return RngStream(0 if seed is None else seed)


def check_positive_int(value, name, minimum=1) -> int:
    if int(value) != value or value < minimum:
        raise InvalidArgumentError(f"{name} must be an integer >= {minimum}, got {value}")
    return int(value)
