"""Observation models for reported counts.

The reporting model used throughout is the gamma-Poisson mixture: given
latent cases ``C``, a reporting rate is drawn from ``Gamma(1/phi, rho*phi)``
and reports are Poisson with that rate times ``C``.  Marginally this is
negative binomial with mean ``rho*C`` and variance ``rho*C + phi*rho^2*C^2``.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammaln, xlogy

from .exceptions import InvalidArgumentError

__all__ = [
    "ReportingModel",
    "Measurement",
    "obs_logdensity",
    "obs_sample",
    "extract_cases",
]

def _check_reporting(rho, phi):
    rho = np.asarray(rho, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(~np.isfinite(rho)) or np.any(rho <= 0) or np.any(rho > 1):
        raise InvalidArgumentError(f"rho must lie in (0, 1], got {rho}")
    if np.any(~np.isfinite(phi)) or np.any(phi < 0):
        raise InvalidArgumentError(f"phi must be >= 0, got {phi}")
    return rho, phi


def obs_logdensity(y, c, rho, phi):
    """Log mass of `y` reports given `c` latent cases.

    Vectorised over broadcastable `y`, `c`, `rho`, `phi`.  Impossible reports
    (``c == 0`` and ``y > 0``) give ``-inf``.
    """
    rho, phi = _check_reporting(rho, phi)
    y = np.asarray(y, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(y < 0) or np.any(c < 0):
        raise InvalidArgumentError("counts must be nonnegative")
    y, c, rho, phi = np.broadcast_arrays(y, c, rho, phi)
    mean = rho * c
    out = np.empty(y.shape)
    pois = phi == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        lp = xlogy(y, mean) - mean - gammaln(y + 1)
        size = np.where(pois, 1.0, 1.0 / np.where(pois, 1.0, phi))
        # negative binomial with mean `mean` and size 1/phi
        lnb = (
            gammaln(y + size)
            - gammaln(size)
            - gammaln(y + 1)
            - size * np.log1p(mean / size)
            + xlogy(y, mean)
            - xlogy(y, mean + size)
        )
    out = np.where(pois, lp, lnb)
    out = np.where((mean == 0) & (y > 0), -np.inf, out)
    out = np.where((mean == 0) & (y == 0), 0.0, out)
    return out if out.ndim else float(out)


def obs_sample(c, rho, phi, gen):
    """Draw reports for latent cases `c` by the two-stage gamma-Poisson scheme."""
    rho, phi = _check_reporting(rho, phi)
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise InvalidArgumentError("latent counts must be nonnegative")
    c, rho, phi = np.broadcast_arrays(c, rho, phi)
    if isinstance(gen, np.random.Generator):
        g = gen
    else:
        g = gen.generator
    pois = phi == 0
    safe_phi = np.where(pois, 1.0, phi)
    rate = np.where(pois, rho, g.gamma(1.0 / safe_phi, rho * safe_phi))
    y = g.poisson(rate * c)
    return y if y.ndim else int(y)


def extract_cases(channels: Mapping[str, Sequence[int]], before, after) -> np.ndarray:
    """Latent counts per channel from cumulative flows at two times.

    `channels` maps each observed channel to the flow columns it sums.
    `before` and `after` are cumulative flow-count arrays whose last axis
    indexes flows.
    """
    before = np.asarray(before)
    after = np.asarray(after)
    if before.shape != after.shape:
        raise IndexError("flow records at the two times have different shapes")
    inc = after - before
    if np.any(inc < 0):
        raise InvalidArgumentError("cumulative flows decreased between the two times")
    return np.stack([inc[..., list(cols)].sum(axis=-1) for cols in channels.values()], axis=-1)


class Measurement:
    """Interface used by the particle filter.

    Subclasses implement :meth:`logdensity` returning per-particle log
    densities of one observation vector ``y`` and may implement
    :meth:`sample`.  Both receive the particle states at the observation time
    ``X (J, c)``, the flow increments since the previous observation
    ``dN (J, F)``, the particle parameters and the observation time.
    """

    channels: tuple = ()

    def bind(self, model):
        return self

    def logdensity(self, y, X, dN, theta, t):
        raise NotImplementedError

    def sample(self, X, dN, theta, t, gen):
        raise NotImplementedError


class ReportingModel(Measurement):
    """Negative binomial reporting of flow increments.

    Parameters
    ----------
    channels : mapping
        Observed channel name -> sequence of ``(source, dest)`` flow keys
        whose increments over the observation interval are summed into the
        latent count for that channel.
    rho, phi : str or float
        Reporting probability and overdispersion, either constants or names
        of model parameters.  All channels share them.
    """

    def __init__(self, channels, rho="rho", phi="phi"):
        spec = tuple((str(k), tuple(tuple(f) for f in v)) for k, v in dict(channels).items())
        if not spec:
            raise InvalidArgumentError("a reporting model needs at least one channel")
        if not isinstance(rho, str):
            _check_reporting(rho, 0.0)
        if not isinstance(phi, str):
            _check_reporting(1.0, phi)
        self.channels_spec = spec
        self.rho = rho
        self.phi = phi
        self._columns = ()

    def __repr__(self):
        return f"ReportingModel({dict(self.channels_spec)}, rho={self.rho!r}, phi={self.phi!r})"

    @property
    def channels(self):
        return tuple(k for k, _ in self.channels_spec)

    def bind(self, model) -> "ReportingModel":
        """Resolve flow keys to column indices of `model`'s flow arrays."""
        cols = tuple(
            (name, tuple(model.flow_column(*key) for key in keys)) for name, keys in self.channels_spec
        )
        bound = ReportingModel(dict(self.channels_spec), self.rho, self.phi)
        bound._columns = cols
        return bound

    def _param(self, value, theta):
        return theta[value] if isinstance(value, str) else value

    def cases(self, dN):
        if not self._columns:
            raise InvalidArgumentError("reporting model is not bound to a model; call bind(model)")
        return extract_cases(dict(self._columns), np.zeros_like(dN), dN)

    def logdensity(self, y, X, dN, theta, t):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        C = self.cases(dN)
        rho = np.asarray(self._param(self.rho, theta), dtype=float)
        phi = np.asarray(self._param(self.phi, theta), dtype=float)
        total = np.zeros(C.shape[0])
        for ch in range(C.shape[1]):
            if np.isnan(y[ch]):
                continue
            total = total + obs_logdensity(y[ch], C[:, ch], rho, phi)
        return total

    def sample(self, X, dN, theta, t, gen):
        C = self.cases(dN)
        rho = np.asarray(self._param(self.rho, theta), dtype=float)
        phi = np.asarray(self._param(self.phi, theta), dtype=float)
        if rho.ndim:
            rho = rho[:, None]
        if phi.ndim:
            phi = phi[:, None]
        return obs_sample(C, rho, phi, gen)
