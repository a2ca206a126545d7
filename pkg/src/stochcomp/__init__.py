"""Plug-and-play inference for stochastic compartment models.

Euler-multinomial simulation with gamma-noise rates, bootstrap particle
filtering, iterated filtering and likelihood-slice/profile tools.
"""

from .covariates import CovariateTable
from .data import ObservedSeries
from .datagen import simulate_data, simulate_observations
from .exceptions import (
    BoundaryError,
    ConfigError,
    DataParseError,
    DegenerateVarianceError,
    FilteringFailureError,
    InvalidArgumentError,
    ModelEvaluationError,
    OutOfRangeError,
    SingularInformationError,
    StochCompError,
    UnsupportedModelError,
)
from .likelihood import (
    SliceSpec,
    chi2_quantile,
    fisher_information,
    likelihood_ratio_test,
    local_quadratic_fit,
    profile_likelihood,
    sliced_likelihood,
    standard_errors,
)
from .measurement import Measurement, ReportingModel, obs_logdensity, obs_sample
from .mif import MifConfig, MifResult, mif_run, mif_update
from .model import CompartmentModel, FlowSpec, NoiseProcess, ScheduledInflow, StateVector, eval_rates
from .rng import GammaNoiseSpec, RngStream, derive_stream, gamma_increment, multinomial_draw
from .simulate import (
    EulerConfig,
    PathRecord,
    euler_step,
    gillespie_simulate,
    pi_oracle,
    simulate_path,
    simulate_paths,
    transition_probs,
)
from .smc import FilterResult, particle_filter, resample_multinomial, resample_systematic
from .transforms import TransformSpec
from .estimators import IteratedFiltering, ParticleFilter

__version__ = "0.1.0"
