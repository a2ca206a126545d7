"""Parameter transforms to and from an unconstrained scale."""

from __future__ import annotations

from typing import Mapping

import numpy as np
from scipy.special import expit, logit

from .exceptions import BoundaryError, InvalidArgumentError

__all__ = ["TransformSpec", "to_unconstrained", "from_unconstrained", "TRANSFORMS"]

TRANSFORMS = ("identity", "log", "logit")


def _forward(tag, value, name):
    v = np.asarray(value, dtype=float)
    if tag == "identity":
        return v
    if tag == "log":
        if np.any(v <= 0):
            raise BoundaryError(
                f"parameter {name!r} must be > 0 for a log transform (got {value}); "
                "fix it or offset it by a small epsilon"
            )
        return np.log(v)
    if np.any(v <= 0) or np.any(v >= 1):
        raise BoundaryError(
            f"parameter {name!r} must lie strictly in (0, 1) for a logit transform "
            f"(got {value}); fix it at the boundary or offset it by a small epsilon"
        )
    return logit(v)


def _inverse(tag, value):
    u = np.asarray(value, dtype=float)
    if tag == "identity":
        return u
    if tag == "log":
        return np.exp(u)
    return expit(u)


class TransformSpec:
    """Per-parameter transform tags; unspecified names default to identity."""

    def __init__(self, tags: Mapping[str, str] | None = None):
        tags = dict(tags or {})
        for name, tag in tags.items():
            if tag not in TRANSFORMS:
                raise InvalidArgumentError(
                    f"unknown transform {tag!r} for {name!r}; expected one of {TRANSFORMS}"
                )
        self.tags = tags

    def __repr__(self):
        return f"TransformSpec({self.tags})"

    def __eq__(self, other):
        return isinstance(other, TransformSpec) and self.tags == other.tags

    def tag(self, name: str) -> str:
        return self.tags.get(name, "identity")

    def forward(self, name, value):
        return _forward(self.tag(name), value, name)

    def inverse(self, name, value):
        return _inverse(self.tag(name), value)


def to_unconstrained(theta: Mapping[str, float], spec: TransformSpec) -> dict:
    out = {}
    for name, v in theta.items():
        u = spec.forward(name, v)
        out[name] = float(u) if np.ndim(u) == 0 else u
    return out


def from_unconstrained(u: Mapping[str, float], spec: TransformSpec) -> dict:
    out = {}
    for name, v in u.items():
        x = spec.inverse(name, v)
        out[name] = float(x) if np.ndim(x) == 0 else x
    return out
