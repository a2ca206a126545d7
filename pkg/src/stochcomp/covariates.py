"""Tabulated covariates with piecewise-linear interpolation."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .exceptions import InvalidArgumentError, OutOfRangeError

__all__ = ["CovariateTable"]

# slack on the span check, absorbs rounding in t0 + k * delta
_SPAN_TOL = 1e-9


class CovariateTable:
    """Named covariate columns on a strictly increasing time grid.

    Values between grid points are linearly interpolated; evaluation outside
    ``[times[0], times[-1]]`` raises :class:`OutOfRangeError`.
    """

    def __init__(self, times, columns: Mapping[str, object]):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size < 1:
            raise InvalidArgumentError("covariate times must be a nonempty 1-d array")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise InvalidArgumentError("covariate times must be strictly increasing")
        if not columns:
            raise InvalidArgumentError("a covariate table needs at least one column")
        cols = {}
        for name, values in columns.items():
            v = np.asarray(values, dtype=float)
            if v.shape != times.shape:
                raise InvalidArgumentError(
                    f"covariate {name!r} has {v.size} values for {times.size} times"
                )
            if not np.all(np.isfinite(v)):
                raise InvalidArgumentError(f"covariate {name!r} has non-finite values")
            cols[str(name)] = v
        self.times = times
        self.columns = cols
        # running trapezoid integrals, exact for the piecewise-linear interpolant
        self._cumint = {}
        for name, v in cols.items():
            seg = 0.5 * np.diff(times) * (v[1:] + v[:-1])
            self._cumint[name] = np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def names(self):
        return tuple(self.columns)

    @property
    def span(self):
        return float(self.times[0]), float(self.times[-1])

    def __repr__(self):
        lo, hi = self.span
        return f"CovariateTable({list(self.columns)}, span=[{lo}, {hi}])"

    def _check(self, t):
        lo, hi = self.span
        t = np.asarray(t, dtype=float)
        if np.any(t < lo - _SPAN_TOL) or np.any(t > hi + _SPAN_TOL):
            raise OutOfRangeError(f"time {t} outside covariate span [{lo}, {hi}]")
        return np.clip(t, lo, hi)

    def at(self, t) -> dict:
        """All columns interpolated at `t` (scalar or array)."""
        t = self._check(t)
        out = {}
        for name, v in self.columns.items():
            val = np.interp(t, self.times, v)
            out[name] = float(val) if np.ndim(val) == 0 else val
        return out

    def value(self, name: str, t):
        t = self._check(t)
        val = np.interp(t, self.times, self.columns[name])
        return float(val) if np.ndim(val) == 0 else val

    def integral(self, name: str, a: float, b: float) -> float:
        """Exact integral of the interpolant of column `name` over ``[a, b]``."""
        return self._antiderivative(name, b) - self._antiderivative(name, a)

    def _antiderivative(self, name, t):
        t = float(self._check(t))
        times, v, cum = self.times, self.columns[name], self._cumint[name]
        k = int(np.searchsorted(times, t, side="right")) - 1
        k = min(max(k, 0), times.size - 1)
        if k == times.size - 1:
            return float(cum[k])
        vt = np.interp(t, times, v)
        return float(cum[k] + 0.5 * (t - times[k]) * (v[k] + vt))

    def to_rows(self):
        names = list(self.columns)
        return names, [[t] + [self.columns[n][i] for n in names] for i, t in enumerate(self.times)]


def covariate_at(table: CovariateTable, t: float) -> dict:
    return table.at(t)
