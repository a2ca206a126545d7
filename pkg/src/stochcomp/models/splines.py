"""Periodic cubic B-spline basis on equispaced knots."""

from __future__ import annotations

import numpy as np

__all__ = ["periodic_bspline_basis"]


def _cubic_bspline(d):
    """Cardinal cubic B-spline centred at 0, support [-2, 2]."""
    a = np.abs(d)
    out = np.zeros_like(a)
    inner = a < 1
    outer = (a >= 1) & (a < 2)
    out[inner] = (4 - 6 * a[inner] ** 2 + 3 * a[inner] ** 3) / 6
    out[outer] = (2 - a[outer]) ** 3 / 6
    return out


def periodic_bspline_basis(t, nbasis: int = 6, period: float = 1.0) -> np.ndarray:
    """Evaluate the basis at `t`; returns shape ``t.shape + (nbasis,)``.

    Basis function ``i`` (0-based) peaks at ``t = i * period / nbasis`` and
    the functions sum to one everywhere.
    """
    if nbasis < 4:
        raise ValueError("a periodic cubic basis needs at least 4 functions")
    t = np.asarray(t, dtype=float)
    u = np.mod(t / period, 1.0) * nbasis
    i = np.arange(nbasis)
    d = np.mod(u[..., None] - i + nbasis / 2, nbasis) - nbasis / 2
    return _cubic_bspline(d)
