"""Ready-made compartment models."""

from .cholera import (
    CholeraParams,
    build_cholera_model,
    cholera_beta,
    cholera_measurement,
    regime_A,
    regime_B,
    spline_basis,
)
from .fixtures import synthetic_cholera_covariates, synthetic_measles_covariates
from .measles import (
    MeaslesParams,
    beta_termtime,
    build_measles_model,
    day_of_year,
    measles_force_of_infection,
    measles_measurement,
    measles_recruitment,
)
from .splines import periodic_bspline_basis
from .toy import SirParams, build_sir_model, death_model, sir_measurement, two_state_model

__all__ = [
    "CholeraParams",
    "build_cholera_model",
    "cholera_beta",
    "cholera_measurement",
    "regime_A",
    "regime_B",
    "spline_basis",
    "synthetic_cholera_covariates",
    "synthetic_measles_covariates",
    "MeaslesParams",
    "beta_termtime",
    "build_measles_model",
    "day_of_year",
    "measles_force_of_infection",
    "measles_measurement",
    "measles_recruitment",
    "periodic_bspline_basis",
    "SirParams",
    "build_sir_model",
    "death_model",
    "sir_measurement",
    "two_state_model",
]
