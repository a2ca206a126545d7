"""Named models for configuration-driven runs."""

from __future__ import annotations

import dataclasses
import difflib
from dataclasses import dataclass

from .exceptions import ConfigError
from .model import CompartmentModel, StateVector
from .models import cholera, measles, toy
from .transforms import TransformSpec

__all__ = ["ModelSetup", "MODELS", "build_setup"]


@dataclass
class ModelSetup:
    model: CompartmentModel
    measurement: object
    theta: dict
    x0: StateVector
    delta: float
    transform: TransformSpec


def _override(cls, params: dict, int_fields=()):
    names = [f.name for f in dataclasses.fields(cls)]
    kw = {}
    for k, v in params.items():
        if k not in names:
            close = difflib.get_close_matches(k, names, n=1)
            hint = f"; did you mean {close[0]!r}?" if close else ""
            raise ConfigError(f"[params] unknown parameter {k!r} for this model{hint}")
        kw[k] = int(v) if k in int_fields else v
    try:
        return cls(**kw)
    except ValueError as exc:
        raise ConfigError(f"[params] {exc}") from None


def _apply_init(x0: StateVector, model, init: dict):
    counts = x0.counts.copy()
    for k, v in init.items():
        if k not in model.index:
            close = difflib.get_close_matches(k, model.compartments, n=1)
            hint = f"; did you mean {close[0]!r}?" if close else ""
            raise ConfigError(f"[init] unknown compartment {k!r}{hint}")
        if v < 0:
            raise ConfigError(f"[init] {k}: counts must be >= 0")
        counts[model.index[k]] = v
    return StateVector(counts, x0.time)


def _sir(params, init, t0, covariates):
    p = _override(toy.SirParams, params, int_fields=("N", "I0"))
    m = toy.build_sir_model(p.N)
    t0 = 0.0 if t0 is None else t0
    tf = TransformSpec({"beta": "log", "gamma": "log", "rho": "logit", "phi": "log", "sigma2": "log"})
    return ModelSetup(m, toy.sir_measurement(), p.theta(), _apply_init(p.initial_state(t0), m, init), 0.25, tf)


def _measles(params, init, t0, covariates):
    p = _override(measles.MeaslesParams, params, int_fields=("S0", "E0", "I0", "R0"))
    t0 = 1950.0 if t0 is None else t0
    m = measles.build_measles_model(p, covariates, t0)
    tf = TransformSpec(
        {k: "log" for k in ("betaH", "betaL", "omega", "alpha", "mu_EI", "mu_IR", "sigma_SE2", "phi")}
        | {"rho": "logit"}
    )
    x0 = _apply_init(p.initial_state(t0), m, init)
    return ModelSetup(m, measles.measles_measurement(), p.theta(), x0, measles.DEFAULT_DELTA, tf)


def _cholera(params, init, t0, covariates):
    params = dict(params)
    b = [params.pop(f"b{i}", None) for i in range(1, 7)]
    base = cholera.CholeraParams()
    params["b"] = tuple(base.b[i] if v is None else v for i, v in enumerate(b))
    p = _override(cholera.CholeraParams, params)
    t0 = 1975.0 if t0 is None else t0
    m = cholera.build_cholera_model(p, covariates, t0)
    tf = TransformSpec(
        {k: "log" for k in ("r", "omega", "alpha", "sigma2", "phi")} | {"gamma": "logit", "rho": "logit"}
    )
    x0 = _apply_init(p.initial_state(t0), m, init)
    return ModelSetup(m, cholera.cholera_measurement(), p.theta(), x0, cholera.DEFAULT_DELTA, tf)


MODELS = {"sir": _sir, "measles": _measles, "cholera": _cholera}


def build_setup(name: str, params=None, init=None, t0=None, covariates=None, transforms=None) -> ModelSetup:
    """Model, measurement, parameters and initial state for a named model."""
    if name not in MODELS:
        close = difflib.get_close_matches(name, MODELS, n=1)
        hint = f"; did you mean {close[0]!r}?" if close else ""
        raise ConfigError(f"[run] model: unknown model {name!r}{hint}; choose from {sorted(MODELS)}")
    setup = MODELS[name](dict(params or {}), dict(init or {}), t0, covariates)
    if transforms:
        unknown = set(transforms) - set(setup.theta)
        if unknown:
            raise ConfigError(f"[transforms] unknown parameters {sorted(unknown)}")
        tags = dict(setup.transform.tags) | dict(transforms)
        setup.transform = TransformSpec(tags)
    return setup
