"""Two-serotype cholera model with partial cross-immunity.

Compartments: never-infected ``S``, infected with serotype 1 or 2 (``I1``,
``I2``), recovered and susceptible only to the other serotype (``S1`` is
susceptible to serotype 1, ``S2`` to serotype 2), secondary infections
(``I1s``, ``I2s``), fully immune ``R``, plus birth source ``B`` and death
sink ``D``.  Primary and secondary infections with the same serotype share
one gamma noise process; both processes have the same variance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..covariates import CovariateTable
from ..exceptions import InvalidArgumentError, ModelEvaluationError
from ..measurement import ReportingModel
from ..model import CompartmentModel, FlowSpec, NoiseProcess, ScheduledInflow, StateVector
from .fixtures import synthetic_cholera_covariates
from .splines import periodic_bspline_basis

__all__ = [
    "CholeraParams",
    "COMPARTMENTS",
    "DEFAULT_DELTA",
    "TREND_ORIGIN",
    "spline_basis",
    "cholera_beta",
    "build_cholera_model",
    "cholera_measurement",
    "regime_A",
    "regime_B",
]

COMPARTMENTS = ("S", "I1", "I2", "S1", "S2", "I1s", "I2s", "R", "B", "D")
DEFAULT_DELTA = 2.0 / 365.0
TREND_ORIGIN = 1990.0
_LOG_BETA_MAX = 700.0


def spline_basis(t) -> np.ndarray:
    """Six periodic cubic B-splines of period one year; ``s_i`` peaks at ``(i-1)/6``."""
    return periodic_bspline_basis(t, 6, 1.0)


def cholera_beta(t, b0, b):
    """``exp(b0 * (t - 1990) + sum_i b_i s_i(t))``.

    `b` has a trailing axis of length 6; leading axes broadcast against `t`
    and `b0` (e.g. one row per particle).
    """
    b = np.asarray(b, dtype=float)
    if b.shape[-1] != 6:
        raise InvalidArgumentError(f"need 6 spline coefficients, got {b.shape[-1]}")
    s = spline_basis(t)
    logb = np.asarray(b0, dtype=float) * (np.asarray(t, dtype=float) - TREND_ORIGIN) + np.sum(b * s, axis=-1)
    if np.any(np.abs(logb) > _LOG_BETA_MAX):
        raise ModelEvaluationError(f"log transmission rate out of range at t={t}: {np.max(np.abs(logb))}")
    return np.exp(logb)


def _initial_default():
    return {"S": 60000, "I1": 30, "I2": 30, "S1": 20000, "S2": 20000, "I1s": 5, "I2s": 5, "R": 49930}


@dataclass
class CholeraParams:
    """Cholera parameters; rates per year.

    `sigma2` is the common infinitesimal variance of the two infection
    noises.  `m` is fixed.  `init` holds counts for the eight epidemiological
    compartments.
    """

    gamma: float = 0.4
    r: float = 38.42
    omega: float = 0.099e-3
    alpha: float = 0.86
    b0: float = -0.0275
    b: tuple = (4.608, 5.342, 5.723, 5.022, 5.508, 5.804)
    sigma2: float = 0.1057**2
    rho: float = 0.067
    phi: float = 0.014
    m: float = 1.0 / 38.8
    init: dict = field(default_factory=_initial_default)

    def __post_init__(self):
        self.b = tuple(float(v) for v in self.b)
        if len(self.b) != 6:
            raise InvalidArgumentError("need 6 spline coefficients b1..b6")
        if not 0 <= self.gamma <= 1:
            raise InvalidArgumentError(f"gamma must lie in [0, 1], got {self.gamma}")
        for k in ("r", "omega", "sigma2", "phi", "m"):
            v = getattr(self, k)
            if not (np.isfinite(v) and v >= 0):
                raise InvalidArgumentError(f"{k} must be finite and >= 0, got {v}")
        if not self.alpha > 0:
            raise InvalidArgumentError(f"alpha must be > 0, got {self.alpha}")
        if not 0 < self.rho <= 1:
            raise InvalidArgumentError(f"rho must lie in (0, 1], got {self.rho}")
        missing = set(COMPARTMENTS[:8]) - set(self.init)
        if missing or set(self.init) - set(COMPARTMENTS[:8]):
            raise InvalidArgumentError(f"init needs exactly the compartments {COMPARTMENTS[:8]}")
        if any(v < 0 for v in self.init.values()):
            raise InvalidArgumentError("initial counts must be >= 0")

    def theta(self) -> dict:
        out = {k: float(getattr(self, k)) for k in ("gamma", "r", "omega", "alpha", "b0")}
        out.update({f"b{i + 1}": v for i, v in enumerate(self.b)})
        out.update(sigma2=float(self.sigma2), rho=float(self.rho), phi=float(self.phi))
        return out

    def initial_state(self, t0: float) -> StateVector:
        return StateVector([self.init[c] for c in COMPARTMENTS[:8]] + [0, 0], t0)


def regime_A(**overrides) -> CholeraParams:
    """Estimates reported for the earlier regime (1975-1990)."""
    kw = dict(
        r=38.42, rho=0.067, gamma=0.400, sigma2=0.1057**2, phi=0.014, omega=0.099e-3,
        alpha=0.860, b0=-0.0275, b=(4.608, 5.342, 5.723, 5.022, 5.508, 5.804),
    )
    kw.update(overrides)
    return CholeraParams(**kw)


def regime_B(**overrides) -> CholeraParams:
    """Estimates reported for the later regime (1990-2005)."""
    kw = dict(
        r=36.91, rho=0.653, gamma=1.00, sigma2=0.0592**2, phi=0.0004, omega=0.0762e-3,
        alpha=0.864, b0=-0.0209, b=(3.507, 3.733, 4.448, 3.534, 4.339, 4.274),
    )
    kw.update(overrides)
    return CholeraParams(**kw)


def build_cholera_model(
    params: CholeraParams | None = None,
    covariates: CovariateTable | None = None,
    t0: float = 1975.0,
) -> CompartmentModel:
    """Two-serotype model driven by a ``pop`` covariate.

    Recruitment is ``floor(P(t) - P(t0) + int_{t0}^{t} m P(s) ds)`` so the
    population tracks the covariate up to a small stochastic discrepancy.
    `params` only supplies the fixed mortality `m`; everything else is read
    from the parameter mapping at run time.
    """
    params = CholeraParams() if params is None else params
    if not isinstance(params, CholeraParams):
        raise InvalidArgumentError("params must be a CholeraParams")
    cov = synthetic_cholera_covariates() if covariates is None else covariates
    if "pop" not in cov.names:
        raise InvalidArgumentError("cholera covariates need a 'pop' column")
    lo, hi = cov.span
    if not lo - 1e-9 <= t0 <= hi:
        raise InvalidArgumentError(f"t0={t0} outside the covariate span [{lo}, {hi}]")
    m = float(params.m)
    P0 = cov.value("pop", t0)

    def force(serotype):
        I, Is = ("I1", "I1s") if serotype == 1 else ("I2", "I2s")

        def lam(t, x, th, c):
            b = np.stack([th[f"b{i}"] for i in range(1, 7)], axis=-1)
            beta = cholera_beta(t, th["b0"], b)
            return beta * (x[I] + x[Is]) ** th["alpha"] / c["pop"] + th["omega"]

        return lam

    lam1, lam2 = force(1), force(2)

    def secondary(lam):
        return lambda t, x, th, c: (1.0 - th["gamma"]) * lam(t, x, th, c)

    def recover(t, x, th, c):
        return th["r"]

    def death(t, x, th, c):
        return m

    def recruit(t):
        return cov.value("pop", t) - P0 + m * cov.integral("pop", t0, t)

    flows = [
        FlowSpec("S", "I1", lam1, noise="xi1"),
        FlowSpec("S", "I2", lam2, noise="xi2"),
        FlowSpec("S1", "I1s", secondary(lam1), noise="xi1"),
        FlowSpec("S2", "I2s", secondary(lam2), noise="xi2"),
        FlowSpec("I1", "S2", recover),
        FlowSpec("I2", "S1", recover),
        FlowSpec("I1s", "R", recover),
        FlowSpec("I2s", "R", recover),
    ] + [FlowSpec(k, "D", death) for k in COMPARTMENTS[:8]]
    return CompartmentModel(
        COMPARTMENTS,
        flows,
        noises=[NoiseProcess("xi1", "sigma2"), NoiseProcess("xi2", "sigma2")],
        inflows=[ScheduledInflow("B", "S", recruit)],
        covariates=cov,
        name="cholera",
    )


def cholera_measurement() -> ReportingModel:
    """Reported cases per serotype (primary plus secondary infections)."""
    return ReportingModel({"inaba": [("S", "I1"), ("S1", "I1s")], "ogawa": [("S", "I2"), ("S2", "I2s")]})
