"""Synthetic covariate fixtures.

These are smooth, made-up series shaped roughly like a large city's birth
rate and population (measles) and a growing rural district (cholera).  They
are not real data.
"""

from __future__ import annotations

import numpy as np

from ..covariates import CovariateTable

__all__ = ["synthetic_measles_covariates", "synthetic_cholera_covariates"]


def synthetic_measles_covariates(start: float = 1940.0, end: float = 1970.0) -> CovariateTable:
    """Monthly births per year (``birthrate``) and population (``pop``)."""
    t = np.arange(start, end + 1e-9, 1.0 / 12.0)
    x = t - start
    # post-war baby boom bump on a slowly declining baseline
    birthrate = 60000.0 + 15000.0 * np.exp(-0.5 * ((t - 1947.0) / 2.0) ** 2) - 300.0 * x
    pop = 3.4e6 - 8000.0 * x + 40000.0 * np.tanh((t - 1946.0) / 3.0)
    return CovariateTable(t, {"birthrate": birthrate, "pop": pop})


def synthetic_cholera_covariates(start: float = 1974.0, end: float = 2006.0) -> CovariateTable:
    """Monthly population (``pop``) of a district growing from ~150k to ~210k."""
    t = np.arange(start, end + 1e-9, 1.0 / 12.0)
    pop = 150000.0 * np.exp(0.011 * (t - start))
    return CovariateTable(t, {"pop": pop})
