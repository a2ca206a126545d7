"""Post-fit analysis of noisy log-likelihood surfaces.

* sliced likelihoods through an estimate, one coordinate at a time;
* tricube-weighted local quadratic smoothing (loess, degree 2);
* observed Fisher information from slopes of conditional log likelihoods;
* profile likelihood confidence intervals with a chi-square cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaincinv
from scipy.stats import chi2

from .exceptions import InvalidArgumentError, SingularInformationError, StochCompError
from .rng import RngStream

__all__ = [
    "SliceSpec",
    "SliceResult",
    "LocalQuadraticFit",
    "ProfileResult",
    "sliced_likelihood",
    "local_quadratic_fit",
    "fisher_information",
    "standard_errors",
    "profile_likelihood",
    "chi2_quantile",
    "likelihood_ratio_test",
    "default_offsets",
]


def chi2_quantile(level: float, df: int = 1) -> float:
    """Quantile of the chi-square distribution with `df` degrees of freedom."""
    if not 0 < level < 1:
        raise InvalidArgumentError(f"level must lie in (0, 1), got {level}")
    if df <= 0:
        raise InvalidArgumentError(f"df must be positive, got {df}")
    return float(2.0 * gammaincinv(df / 2.0, level))


def likelihood_ratio_test(loglik_full: float, loglik_restricted: float, df: int = 1, level: float = 0.99):
    """Compare nested models; returns statistic, p-value and the decision at `level`."""
    stat = 2.0 * (loglik_full - loglik_restricted)
    return {
        "statistic": stat,
        "p_value": float(chi2.sf(stat, df)),
        "critical": chi2_quantile(level, df),
        "reject_restricted": bool(stat > chi2_quantile(level, df)),
    }


def default_offsets(sd: float = 1.0, n: int = 21) -> np.ndarray:
    """Equispaced offsets spanning two standard deviations either side."""
    return np.linspace(-2.0 * sd, 2.0 * sd, n)


@dataclass
class SliceSpec:
    """Offsets along coordinate `index` at which to evaluate the likelihood."""

    index: int
    offsets: np.ndarray
    reps: int = 1
    span: float = 0.6

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=float)
        if self.offsets.ndim != 1 or self.offsets.size < 3:
            raise InvalidArgumentError("a slice needs at least three offsets")
        if not (np.any(self.offsets == 0) and self.offsets.min() < 0 < self.offsets.max()):
            raise InvalidArgumentError("slice offsets must include 0 and points on both sides")
        if not 0 < self.span <= 1:
            raise InvalidArgumentError(f"span must lie in (0, 1], got {self.span}")
        if self.reps < 1:
            raise InvalidArgumentError("reps must be >= 1")


@dataclass
class SliceResult:
    """Evaluations ``logliks[s][j, r]`` and ``cond_logliks[s][j, r, n]`` per slice ``s``.

    Failed evaluations are NaN.
    """

    theta_hat: np.ndarray
    specs: list
    logliks: list
    cond_logliks: list = field(default_factory=list)

    def mean_logliks(self, s: int) -> np.ndarray:
        return np.nanmean(self.logliks[s], axis=1)

    def mean_cond_logliks(self, s: int) -> np.ndarray:
        return np.nanmean(self.cond_logliks[s], axis=1)


def _as_result(value):
    if hasattr(value, "loglik"):
        return float(value.loglik), np.asarray(getattr(value, "cond_logliks", [value.loglik]), dtype=float)
    return float(value), np.array([float(value)])


def sliced_likelihood(
    evaluator: Callable,
    theta_hat,
    specs: Sequence[SliceSpec],
    stream: RngStream,
    common_random_numbers: bool = True,
) -> SliceResult:
    """Evaluate ``evaluator(theta_hat + z e_i, stream)`` along each slice.

    `evaluator` returns a float or an object with ``loglik`` and
    ``cond_logliks``.  With common random numbers every offset of replicate
    ``r`` uses ``stream.derive(r)``; otherwise ``stream.derive(s, j, r)``.
    Exceptions raised by the evaluator are recorded as missing values.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    logliks, conds = [], []
    n_obs = None
    for s, spec in enumerate(specs):
        if not 0 <= spec.index < theta_hat.size:
            raise InvalidArgumentError(f"slice index {spec.index} out of range")
        ll = np.full((spec.offsets.size, spec.reps), np.nan)
        cl = [[None] * spec.reps for _ in spec.offsets]
        for j, z in enumerate(spec.offsets):
            theta = theta_hat.copy()
            theta[spec.index] += z
            for r in range(spec.reps):
                sub = stream.derive(r) if common_random_numbers else stream.derive(s, j, r)
                try:
                    ll[j, r], cl[j][r] = _as_result(evaluator(theta, sub))
                    n_obs = cl[j][r].size
                except (StochCompError, ArithmeticError, ValueError):
                    continue
        logliks.append(ll)
        conds.append(cl)
    cond_arrays = []
    for cl in conds:
        arr = np.full((len(cl), len(cl[0]), n_obs or 1), np.nan)
        for j, row in enumerate(cl):
            for r, v in enumerate(row):
                if v is not None:
                    arr[j, r] = v
        cond_arrays.append(arr)
    return SliceResult(theta_hat, list(specs), logliks, cond_arrays)


def _tricube(u):
    u = np.clip(np.abs(u), 0.0, 1.0)
    return (1 - u**3) ** 3


def _local_fit(z, v, q, span, min_points=3):
    n = z.size
    d = np.abs(z - q)
    k = max(int(math.floor(span * n)), min_points + 1)
    for k_try in range(min(k, n), n + 1):
        dmax = np.sort(d)[k_try - 1]
        if k_try == n and span >= 1:
            dmax = dmax * max(1.0, span)
        for widen in (1.0, 1.0 + 1e-9, 1.5, 2.0):
            r = dmax * widen
            if r <= 0:
                continue
            w = _tricube(d / r)
            keep = w > 0
            if np.unique(z[keep]).size < min_points:
                continue
            A = np.column_stack([np.ones(keep.sum()), z[keep] - q, (z[keep] - q) ** 2])
            sw = np.sqrt(w[keep])
            coef, _, rank, _ = np.linalg.lstsq(A * sw[:, None], v[keep] * sw, rcond=None)
            if rank == 3:
                return coef[0]
    raise InvalidArgumentError(f"local quadratic fit is rank deficient at z={q}")


@dataclass
class LocalQuadraticFit:
    z: np.ndarray
    fitted: np.ndarray
    argmax: float
    max: float

    def __call__(self, q):
        return np.interp(q, self.z, self.fitted)


def local_quadratic_fit(z, values, span: float = 0.6, query=None, resolution: int = 2001) -> LocalQuadraticFit:
    """Loess smoother of degree 2 with tricube weights.

    Each query point gets a weighted least-squares quadratic fitted to the
    nearest ``span`` fraction of the points.  The curve is evaluated on
    `query` (default: `resolution` equispaced points over the data range)
    and its maximiser located there, ties going to the smallest ``z``.
    Missing (NaN) values are dropped.
    """
    z = np.asarray(z, dtype=float)
    v = np.asarray(values, dtype=float)
    ok = np.isfinite(z) & np.isfinite(v)
    z, v = z[ok], v[ok]
    if z.size < 5:
        raise InvalidArgumentError("local quadratic fit needs at least 5 points")
    if not 0 < span <= 1:
        raise InvalidArgumentError(f"span must lie in (0, 1], got {span}")
    order = np.argsort(z, kind="stable")
    z, v = z[order], v[order]
    if query is None:
        query = np.linspace(z[0], z[-1], resolution)
    query = np.asarray(query, dtype=float)
    fitted = np.array([_local_fit(z, v, q, span) for q in query])
    top = fitted.max()
    # values equal up to rounding count as ties
    i = int(np.argmax(fitted >= top - 1e-12 * max(1.0, abs(top))))
    return LocalQuadraticFit(query, fitted, float(query[i]), float(fitted[i]))


def _slopes(cond, offsets):
    """OLS slope (with intercept) of each column of `cond` on `offsets`."""
    offsets = np.asarray(offsets, dtype=float)
    cond = np.asarray(cond, dtype=float)
    out = np.empty(cond.shape[1])
    for n in range(cond.shape[1]):
        ok = np.isfinite(cond[:, n])
        zz, yy = offsets[ok], cond[ok, n]
        if np.unique(zz).size < 2:
            raise InvalidArgumentError("slope estimation needs at least two distinct offsets")
        zc = zz - zz.mean()
        out[n] = np.dot(zc, yy - yy.mean()) / np.dot(zc, zc)
    return out


def fisher_information(cond_logliks, offsets, tol: float = 1e-10) -> np.ndarray:
    """Observed information ``I[i, k] = sum_n s[n, i] s[n, k]``.

    ``cond_logliks[i]`` is an array ``(K_i, N)`` of conditional log
    likelihoods along slice ``i`` at ``offsets[i]``; ``s[n, i]`` is the OLS
    slope of its column ``n``.

    Raises
    ------
    SingularInformationError
        If the matrix is (numerically) singular.
    """
    slopes = np.column_stack([_slopes(c, z) for c, z in zip(cond_logliks, offsets)])
    info = slopes.T @ slopes
    info = 0.5 * (info + info.T)
    eig = np.linalg.eigvalsh(info)
    if eig.max() <= 0 or eig.min() <= tol * eig.max():
        raise SingularInformationError(
            "observed information matrix is singular; use a profile likelihood instead"
        )
    return info


def standard_errors(info) -> np.ndarray:
    return np.sqrt(np.diag(np.linalg.inv(info)))


@dataclass
class ProfileResult:
    grid: np.ndarray
    logliks: np.ndarray
    smooth: LocalQuadraticFit
    level: float
    ci: tuple
    cutoff: float

    @property
    def maximizer(self):
        return self.smooth.argmax


def _crossing(z, f, i, cutoff, step):
    j = i
    while 0 <= j + step < z.size and f[j + step] >= cutoff:
        j += step
    if not 0 <= j + step < z.size:
        return float("nan")
    a, b = j, j + step
    if f[a] == f[b]:
        return float(z[a])
    return float(z[a] + (cutoff - f[a]) * (z[b] - z[a]) / (f[b] - f[a]))


def profile_likelihood(
    maximizer: Callable[[float], float],
    grid,
    level: float = 0.99,
    span: float = 0.6,
    resolution: int = 2001,
) -> ProfileResult:
    """Profile log likelihood over `grid` and its chi-square confidence interval.

    ``maximizer(value)`` returns the log likelihood maximised over the other
    parameters with the profiled one fixed at `value`; failures are recorded
    as missing.  The profile is smoothed by :func:`local_quadratic_fit`, and
    the interval holds the values whose smoothed log likelihood is within
    half the chi-square(1) quantile of the maximum.  Endpoints are found by
    linear interpolation of the smoothed curve; an endpoint that is not
    reached inside the grid is NaN.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise InvalidArgumentError("profile grid must be strictly increasing")
    if not 0 <= level < 1:
        raise InvalidArgumentError(f"level must lie in [0, 1), got {level}")
    vals = np.full(grid.size, np.nan)
    for i, g in enumerate(grid):
        try:
            vals[i] = float(maximizer(float(g)))
        except (StochCompError, ArithmeticError, ValueError):
            continue
    return profile_from_values(grid, vals, level, span, resolution)


def profile_from_values(grid, values, level=0.99, span=0.6, resolution=2001) -> ProfileResult:
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    fit = local_quadratic_fit(grid, values, span=span, resolution=resolution)
    q = 0.0 if level == 0 else chi2_quantile(level, 1)
    cutoff = fit.max - q / 2.0
    i = int(np.argmax(fit.fitted))
    lo = _crossing(fit.z, fit.fitted, i, cutoff, -1)
    hi = _crossing(fit.z, fit.fitted, i, cutoff, +1)
    return ProfileResult(grid, values, fit, level, (lo, hi), cutoff)
