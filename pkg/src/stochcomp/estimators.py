"""Estimator-style wrappers around the particle filter and iterated filtering.

These follow the scikit-learn conventions (constructor stores parameters,
``fit`` learns attributes ending in ``_``, ``score`` returns a log
likelihood) so that they can be cloned and inspected with ``get_params``.
The data ``X`` is an observation series; there is no target ``y``.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .mif import MifConfig, mif_run
from .model import StateVector
from .simulate import EulerConfig
from .smc import particle_filter
from .transforms import TransformSpec
from .validation import check_positive_int, check_series, check_stream

__all__ = ["ParticleFilter", "IteratedFiltering"]


class ParticleFilter(BaseEstimator):
    """Log-likelihood estimation at fixed parameters.

    Attributes
    ----------
    result_ : FilterResult
    loglik_ : float
    """

    def __init__(self, model=None, measurement=None, theta=None, x0=None, J=1000, delta=0.1,
                 resampler="multinomial", seed=0, n_jobs=1):
        self.model = model
        self.measurement = measurement
        self.theta = theta
        self.x0 = x0
        self.J = J
        self.delta = delta
        self.resampler = resampler
        self.seed = seed
        self.n_jobs = n_jobs

    def _run(self, X, theta):
        data = check_series(X, self.measurement.channels)
        return particle_filter(
            self.model, self.measurement, data, theta, self.x0, check_positive_int(self.J, "J", 2),
            EulerConfig(self.delta), check_stream(self.seed), self.resampler,
            workers=check_positive_int(self.n_jobs, "n_jobs"),
        )

    def fit(self, X, y=None):
        self.result_ = self._run(X, self.theta)
        self.loglik_ = self.result_.loglik
        return self

    def score(self, X, y=None):
        return self._run(X, self.theta).loglik


class IteratedFiltering(BaseEstimator):
    """Maximum likelihood by iterated filtering.

    Attributes
    ----------
    theta_ : dict
        Final parameter estimate.
    x0_ : ndarray
        Final initial-state estimate.
    result_ : MifResult
    """

    def __init__(self, model=None, measurement=None, theta_init=None, x_init=None, sigma_theta=None,
                 sigma_init=None, transform=None, J=1000, M=20, a=0.95, b=1.0, L=1, delta=0.1,
                 resampler="multinomial", seed=0, n_jobs=1):
        self.model = model
        self.measurement = measurement
        self.theta_init = theta_init
        self.x_init = x_init
        self.sigma_theta = sigma_theta
        self.sigma_init = sigma_init
        self.transform = transform
        self.J = J
        self.M = M
        self.a = a
        self.b = b
        self.L = L
        self.delta = delta
        self.resampler = resampler
        self.seed = seed
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        data = check_series(X, self.measurement.channels)
        cfg = MifConfig(
            J=self.J, M=self.M, a=self.a, b=self.b, L=self.L, theta_init=self.theta_init,
            x_init=self.x_init, sigma_theta=dict(self.sigma_theta or {}),
            sigma_init=dict(self.sigma_init or {}),
            transform=self.transform if self.transform is not None else TransformSpec(),
            resampler=self.resampler,
        )
        stream = check_stream(self.seed)
        self.result_ = mif_run(self.model, self.measurement, data, cfg, stream.derive(0),
                               euler=EulerConfig(self.delta), workers=check_positive_int(self.n_jobs, "n_jobs"))
        self.theta_ = dict(self.result_.theta_hat)
        self.x0_ = self.result_.x_hat
        return self

    def score(self, X, y=None):
        """Particle-filter log likelihood at the fitted parameters."""
        data = check_series(X, self.measurement.channels)
        x0 = StateVector(self.x0_, getattr(self.x_init, "time", 0.0))
        return particle_filter(self.model, self.measurement, data, self.theta_, x0, self.J,
                               EulerConfig(self.delta), check_stream(self.seed).derive(1),
                               self.resampler, workers=self.n_jobs).loglik
