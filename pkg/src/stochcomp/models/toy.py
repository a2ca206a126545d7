"""Small models for testing and demonstration."""

from __future__ import annotations

from dataclasses import dataclass

from ..exceptions import InvalidArgumentError
from ..measurement import ReportingModel
from ..model import CompartmentModel, FlowSpec, NoiseProcess, StateVector

__all__ = ["death_model", "two_state_model", "SirParams", "build_sir_model", "sir_measurement"]


def death_model(mu: str | float = "mu") -> CompartmentModel:
    """Linear death process ``X -> D`` at per-capita rate `mu`."""
    if isinstance(mu, str):
        rate = lambda t, x, th, c: th[mu]  # noqa: E731
    else:
        mu = float(mu)
        rate = lambda t, x, th, c: mu  # noqa: E731
    return CompartmentModel(("X", "D"), [FlowSpec("X", "D", rate)], autonomous=True, name="death")


def two_state_model() -> CompartmentModel:
    """Individuals switching ``A <-> B`` at rates ``mu_AB`` and ``mu_BA``."""
    return CompartmentModel(
        ("A", "B"),
        [
            FlowSpec("A", "B", lambda t, x, th, c: th["mu_AB"]),
            FlowSpec("B", "A", lambda t, x, th, c: th["mu_BA"]),
        ],
        autonomous=True,
        name="two_state",
    )


@dataclass
class SirParams:
    """Closed SIR epidemic; rates per day.  ``sigma2`` is noise on infection."""

    beta: float = 0.6
    gamma: float = 0.3
    rho: float = 0.5
    phi: float = 0.05
    sigma2: float = 0.0
    N: int = 5000
    I0: int = 10

    def __post_init__(self):
        if not (self.beta >= 0 and self.gamma >= 0 and self.sigma2 >= 0 and self.phi >= 0):
            raise InvalidArgumentError("rates, sigma2 and phi must be >= 0")
        if not 0 < self.rho <= 1:
            raise InvalidArgumentError(f"rho must lie in (0, 1], got {self.rho}")
        if not 0 <= self.I0 <= self.N:
            raise InvalidArgumentError("need 0 <= I0 <= N")

    def theta(self) -> dict:
        return {k: float(getattr(self, k)) for k in ("beta", "gamma", "rho", "phi", "sigma2")}

    def initial_state(self, t0: float = 0.0) -> StateVector:
        return StateVector([self.N - self.I0, self.I0, 0], t0)


def build_sir_model(N: int = 5000) -> CompartmentModel:
    """``S -> I`` at ``beta I / N`` (gamma noise ``sigma2``), ``I -> R`` at ``gamma``."""
    N = float(N)
    return CompartmentModel(
        ("S", "I", "R"),
        [
            FlowSpec("S", "I", lambda t, x, th, c: th["beta"] * x["I"] / N, noise="xi"),
            FlowSpec("I", "R", lambda t, x, th, c: th["gamma"]),
        ],
        noises=[NoiseProcess("xi", "sigma2")],
        autonomous=True,
        name="sir",
    )


def sir_measurement() -> ReportingModel:
    """Reported new infections per interval."""
    return ReportingModel({"cases": [("S", "I")]})
