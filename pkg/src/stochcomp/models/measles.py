"""Measles SEIR model with term-time forcing and delayed school recruitment.

Susceptibles enter at school age: births are recruited into ``S`` after a
delay of `tau` years.  Transmission switches between a school-term value
``betaH`` and a holiday value ``betaL`` on a fixed 365-day calendar, and
new infections carry multiplicative gamma noise.  Reported cases are the
``I -> R`` transitions over each reporting interval.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..covariates import CovariateTable
from ..exceptions import InvalidArgumentError, ModelEvaluationError
from ..measurement import ReportingModel
from ..model import CompartmentModel, FlowSpec, NoiseProcess, ScheduledInflow, StateVector
from .fixtures import synthetic_measles_covariates

__all__ = [
    "MeaslesParams",
    "HOLIDAYS",
    "DEFAULT_DELTA",
    "day_of_year",
    "beta_termtime",
    "measles_force_of_infection",
    "measles_recruitment",
    "build_measles_model",
    "measles_measurement",
]

#: school holidays (inclusive day ranges): Christmas, Easter, summer, autumn half-term
HOLIDAYS = ((356, 365), (1, 6), (100, 115), (200, 251), (300, 307))

DEFAULT_DELTA = 1.0 / 365.0

_HOLIDAY = np.zeros(366, dtype=bool)
for _lo, _hi in HOLIDAYS:
    _HOLIDAY[_lo : _hi + 1] = True


def day_of_year(t):
    """``1 + floor(365 * frac(t))`` for time `t` in years; leap days ignored."""
    t = np.asarray(t, dtype=float)
    d = 1 + np.floor(365.0 * (t - np.floor(t))).astype(np.int64)
    # guard against frac(t) rounding up to 1
    return np.minimum(d, 365)


def beta_termtime(day, betaH, betaL):
    """Transmission rate on calendar `day` (1..365)."""
    day = np.asarray(day)
    if np.any(day != np.floor(day)) or np.any(day < 1) or np.any(day > 365):
        raise InvalidArgumentError(f"day must be an integer in 1..365, got {day}")
    return np.where(_HOLIDAY[day.astype(np.int64)], betaL, betaH)


def measles_force_of_infection(t, I, P, params):
    """Per-susceptible infection rate ``beta(t) * (I + omega)**alpha / P``.

    `params` is a mapping (or :class:`MeaslesParams`) with ``betaH``,
    ``betaL``, ``omega`` and ``alpha``; entries may be per-particle arrays.
    """
    if isinstance(params, MeaslesParams):
        params = asdict(params)
    P = np.asarray(P, dtype=float)
    if np.any(~(P > 0)):
        raise InvalidArgumentError(f"population size must be > 0, got {P}")
    I = np.asarray(I, dtype=float)
    if np.any(I < 0):
        raise InvalidArgumentError("infective count must be >= 0")
    beta = beta_termtime(day_of_year(t), params["betaH"], params["betaL"])
    return beta * (I + params["omega"]) ** params["alpha"] / P


def measles_recruitment(births: CovariateTable, tau: float, t: float, t0: float = 0.0, column="birthrate"):
    """Cumulative recruitment ``floor(int_{t0}^{t} b(s - tau) ds)``.

    Birth rates are interpolated linearly, so the integral is exact for the
    piecewise-linear interpolant.
    """
    if t < t0:
        raise InvalidArgumentError(f"t={t} precedes the recruitment origin {t0}")
    return int(np.floor(births.integral(column, t0 - tau, t - tau)))


@dataclass
class MeaslesParams:
    """Measles parameters.  Defaults are synthetic, not fitted values.

    Rates are per year; `sigma_SE2` is the infinitesimal variance of the
    noise on infection (units of time).  `tau` and `m` are held fixed.
    """

    betaH: float = 1400.0
    betaL: float = 800.0
    omega: float = 1.0
    alpha: float = 0.97
    mu_EI: float = 365.0 / 8.0
    mu_IR: float = 365.0 / 5.0
    sigma_SE2: float = 0.002
    rho: float = 0.5
    phi: float = 0.05
    tau: float = 4.0
    m: float = 1.0 / 50.0
    S0: int = 110000
    E0: int = 200
    I0: int = 200
    R0: int = 0

    def __post_init__(self):
        for k in ("betaH", "betaL", "omega", "mu_EI", "mu_IR", "sigma_SE2", "phi", "tau", "m"):
            v = getattr(self, k)
            if not (np.isfinite(v) and v >= 0):
                raise InvalidArgumentError(f"{k} must be finite and >= 0, got {v}")
        if not self.alpha > 0:
            raise InvalidArgumentError(f"alpha must be > 0, got {self.alpha}")
        if not 0 < self.rho <= 1:
            raise InvalidArgumentError(f"rho must lie in (0, 1], got {self.rho}")
        for k in ("S0", "E0", "I0", "R0"):
            if getattr(self, k) < 0:
                raise InvalidArgumentError(f"{k} must be >= 0")

    def theta(self) -> dict:
        """Parameters read by the rate and measurement functions."""
        keys = ("betaH", "betaL", "omega", "alpha", "mu_EI", "mu_IR", "sigma_SE2", "rho", "phi")
        return {k: float(getattr(self, k)) for k in keys}

    def initial_state(self, t0: float) -> StateVector:
        """Counts for ``(S, E, I, R, B, D)``; ``R`` is reset residually when filtering."""
        return StateVector([self.S0, self.E0, self.I0, self.R0, 0, 0], t0)


def build_measles_model(
    params: MeaslesParams | None = None,
    covariates: CovariateTable | None = None,
    t0: float = 1950.0,
) -> CompartmentModel:
    """SEIR model with births ``B`` and deaths ``D``.

    `covariates` needs columns ``birthrate`` (per year) and ``pop`` covering
    ``[t0 - tau, t_end]``; the synthetic fixture is used by default.  The
    initializer sets ``R`` to the population at the start minus ``S + E + I``.
    """
    params = MeaslesParams() if params is None else params
    if not isinstance(params, MeaslesParams):
        raise InvalidArgumentError("params must be a MeaslesParams")
    cov = synthetic_measles_covariates() if covariates is None else covariates
    for col in ("birthrate", "pop"):
        if col not in cov.names:
            raise InvalidArgumentError(f"measles covariates need a {col!r} column")
    lo, hi = cov.span
    if t0 - params.tau < lo - 1e-9 or t0 > hi:
        raise InvalidArgumentError(
            f"covariates span [{lo}, {hi}] do not cover the delayed birth window from {t0 - params.tau}"
        )
    tau, m = float(params.tau), float(params.m)

    def foi(t, x, th, c):
        return measles_force_of_infection(t, x["I"], c["pop"], th)

    def death(t, x, th, c):
        return m

    def recruit(t):
        return cov.integral("birthrate", t0 - tau, t - tau)

    def init(X, th, c):
        P = int(round(c["pop"]))
        X[:, 3] = P - X[:, 0] - X[:, 1] - X[:, 2]
        if np.any(X[:, 3] < 0):
            raise ModelEvaluationError("S + E + I exceeds the population at the start")
        return X

    flows = [
        FlowSpec("S", "E", foi, noise="xi_SE"),
        FlowSpec("E", "I", lambda t, x, th, c: th["mu_EI"]),
        FlowSpec("I", "R", lambda t, x, th, c: th["mu_IR"]),
    ] + [FlowSpec(k, "D", death) for k in ("S", "E", "I", "R")]
    return CompartmentModel(
        ("S", "E", "I", "R", "B", "D"),
        flows,
        noises=[NoiseProcess("xi_SE", "sigma_SE2")],
        inflows=[ScheduledInflow("B", "S", recruit)],
        covariates=cov,
        initializer=init,
        name="measles",
    )


def measles_measurement() -> ReportingModel:
    """Reported cases: ``I -> R`` transitions, negative binomial with (rho, phi)."""
    return ReportingModel({"cases": [("I", "R")]})
