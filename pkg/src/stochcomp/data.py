"""Observed time series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError

__all__ = ["ObservedSeries"]


@dataclass
class ObservedSeries:
    """Observations ``values[n]`` at strictly increasing ``times[n]``.

    ``values`` has one column per named channel; NaN marks a missing count.
    """

    times: np.ndarray
    values: np.ndarray
    names: tuple = ("cases",)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        names = tuple(str(n) for n in self.names)
        if times.ndim != 1 or times.size == 0:
            raise InvalidArgumentError("observation times must be a nonempty 1-d array")
        if values.shape != (times.size, len(names)):
            raise InvalidArgumentError(
                f"values shape {values.shape} does not match {times.size} times x {len(names)} channels"
            )
        if not np.all(np.isfinite(times)) or np.any(np.diff(times) <= 0):
            raise InvalidArgumentError("observation times must be finite and strictly increasing")
        obs = values[~np.isnan(values)]
        if np.any(obs < 0) or np.any(obs != np.round(obs)) or np.any(~np.isfinite(obs)):
            raise InvalidArgumentError("observed counts must be nonnegative integers")
        self.times = times
        self.values = values
        self.names = names

    def __len__(self):
        return self.times.size

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.values).any())

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def __eq__(self, other):
        return (
            isinstance(other, ObservedSeries)
            and self.names == other.names
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )
