"""Sample-path generation.

* :func:`euler_step` / :func:`simulate_path` -- the Euler-multinomial scheme:
  per step, draw integrated-noise increments, turn rates into competing-risk
  probabilities with :func:`transition_probs`, and move individuals out of
  each compartment with one multinomial draw.
* :func:`gillespie_simulate` -- exact event-by-event simulation for
  noise-free models, with thinning when rates vary in time.
* :func:`pi_oracle` -- the analytic one-step transition probability of a
  single gamma-noise flow, to first order in the step length.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .exceptions import InvalidArgumentError, UnsupportedModelError
from .model import CompartmentModel, StateVector
from .rng import RngStream, gamma_increments, sequential_multinomial

__all__ = [
    "EulerConfig",
    "PathRecord",
    "PathEnsemble",
    "transition_probs",
    "euler_step",
    "simulate_path",
    "simulate_paths",
    "gillespie_simulate",
    "pi_oracle",
    "substep_times",
    "BLOCK_SIZE",
]

#: particles per independently seeded block; fixed so results never depend on
#: the number of worker threads
BLOCK_SIZE = 1024

_DIVIDE_TOL = 1e-9
MAX_STEPS = 100_000_000


@dataclass(frozen=True)
class EulerConfig:
    delta: float
    record_substeps: bool = False
    max_steps: int = MAX_STEPS

    def __post_init__(self):
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise InvalidArgumentError(f"Euler step delta must be > 0, got {self.delta}")


def substep_times(t0: float, t1: float, delta: float) -> np.ndarray:
    """Sub-step boundaries from `t0` to `t1`.

    If `delta` does not divide the interval (to within 1e-9) the last
    sub-step is shortened; `delta` itself is never changed.
    """
    span = t1 - t0
    if span < 0:
        raise InvalidArgumentError(f"interval end {t1} precedes start {t0}")
    if span == 0:
        return np.array([t0])
    k = int(math.floor(span / delta + _DIVIDE_TOL))
    if abs(span - k * delta) <= _DIVIDE_TOL * max(1.0, abs(span)):
        grid = t0 + delta * np.arange(k + 1)
    else:
        grid = np.concatenate([t0 + delta * np.arange(k + 1), [t1]])
    grid[-1] = t1
    return grid


def transition_probs(rates, increments) -> np.ndarray:
    """Competing-risk exit probabilities for one source compartment.

    ``p_j = (1 - exp(-H)) * mu_j dG_j / H`` with ``H = sum_k mu_k dG_k``.
    The last axis indexes destinations; leading axes broadcast.  A zero total
    hazard gives all-zero probabilities.
    """
    rates = np.asarray(rates, dtype=float)
    increments = np.asarray(increments, dtype=float)
    if np.any(rates < 0) or np.any(increments < 0):
        raise InvalidArgumentError("rates and noise increments must be nonnegative")
    h = rates * increments
    total = h.sum(axis=-1, keepdims=True)
    leave = -np.expm1(-total)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(total > 0, leave * h / total, 0.0)
    return p


def _theta_rows(theta: Mapping[str, object], rows, n: int) -> dict:
    out = {}
    for k, v in theta.items():
        a = np.asarray(v)
        if a.ndim == 0:
            out[k] = np.full(n, float(a))
        elif a.shape[0] == n and rows is None:
            out[k] = a
        else:
            out[k] = a[rows]
    return out


def _step(model: CompartmentModel, t: float, dt: float, X: np.ndarray, theta, gen):
    """One Euler-multinomial step for a block of particles ``X (J, c)``."""
    J = X.shape[0]
    cov = model.covariates_at(t)
    mu = model.flow_rates(t, X, theta, cov)
    F = len(model.flows)
    dN = np.zeros((J, F + len(model.inflows)), dtype=np.int64)
    if F:
        draws = [gamma_increments(nz.variance(theta), dt, gen, size=J) for nz in model.noises]
        dG = np.empty_like(mu)
        for k, pos in enumerate(model._flow_noise):
            dG[:, k] = dt if pos is None else draws[pos]
        h = mu * dG
        for src, ks in model._groups:
            p = transition_probs(mu[:, ks], dG[:, ks]) if len(ks) > 1 else -np.expm1(-h[:, ks])
            dN[:, ks] = sequential_multinomial(X[:, src], p, gen)
    Xn = X.copy()
    for k in range(F):
        Xn[:, model._flow_src[k]] -= dN[:, k]
        Xn[:, model._flow_dst[k]] += dN[:, k]
    for g, inflow in enumerate(model.inflows):
        n_in = math.floor(inflow.cumulative(t + dt)) - math.floor(inflow.cumulative(t))
        if n_in < 0:
            raise InvalidArgumentError(f"scheduled inflow {inflow.label} decreased at t={t}")
        dN[:, F + g] = n_in
        Xn[:, model._inflow_dst[g]] += n_in
    return Xn, dN


def _advance(model, X, t0, t1, theta, config: EulerConfig, gen, record=None):
    """Advance a block from `t0` to `t1`; returns ``(X, dN_total)``."""
    grid = substep_times(t0, t1, config.delta)
    total = np.zeros((X.shape[0], len(model.flows) + len(model.inflows)), dtype=np.int64)
    for a, b in zip(grid[:-1], grid[1:]):
        X, dN = _step(model, float(a), float(b - a), X, theta, gen)
        total += dN
        if record is not None:
            record(float(b), X, total)
    return X, total


def _blocks(J: int):
    return [slice(s, min(s + BLOCK_SIZE, J)) for s in range(0, J, BLOCK_SIZE)]


def propagate(model, X, t0, t1, theta, config, streams, workers: int = 1):
    """Advance an ensemble ``X (J, c)`` block by block.

    ``streams[b]`` is the generator source for block ``b``.  Blocks are
    independent so they may run on a thread pool without affecting results.
    """
    J = X.shape[0]
    blocks = _blocks(J)

    def run(b):
        sl = blocks[b]
        th = {k: (v[sl] if np.ndim(v) else v) for k, v in theta.items()}
        return _advance(model, X[sl], t0, t1, th, config, streams[b].generator)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(blocks))))
    else:
        parts = [run(b) for b in range(len(blocks))]
    Xn = np.concatenate([p[0] for p in parts], axis=0)
    dN = np.concatenate([p[1] for p in parts], axis=0)
    return Xn, dN


def euler_step(model: CompartmentModel, x, theta, config: EulerConfig, stream: RngStream, t=None):
    """One Euler step of length ``config.delta``.

    `x` is a :class:`StateVector` or an integer array ``(J, c)`` of particle
    states (then `t` gives the time).  Returns ``(new_state, flow_increments)``
    in the same form; flow increments have one column per flow followed by one
    per scheduled inflow.
    """
    if isinstance(x, StateVector):
        X = x.counts[None, :]
        t = x.time
    else:
        X = np.asarray(x, dtype=np.int64)
        if X.ndim == 1:
            X = X[None, :]
        t = 0.0 if t is None else float(t)
    J = X.shape[0]
    th = _theta_rows(theta, None, J)
    Xn, dN = _step(model, t, config.delta, X, th, stream.generator)
    if isinstance(x, StateVector):
        return StateVector(Xn[0], t + config.delta), dN[0]
    if np.ndim(x) == 1:
        return Xn[0], dN[0]
    return Xn, dN


@dataclass
class PathRecord:
    """One recorded sample path.

    ``states[k]`` and ``flows[k]`` (cumulative counts since the start) are the
    values at ``times[k]``; flow columns are labelled by ``flow_labels``.
    """

    times: np.ndarray
    states: np.ndarray
    flows: np.ndarray
    compartments: tuple
    flow_labels: tuple

    def state(self, k: int) -> StateVector:
        return StateVector(self.states[k], self.times[k])

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.compartments.index(name)]

    def flow(self, label: str) -> np.ndarray:
        return self.flows[:, self.flow_labels.index(label)]


@dataclass
class PathEnsemble:
    """Many paths on a shared time grid: ``states`` is ``(n_paths, T, c)``."""

    times: np.ndarray
    states: np.ndarray
    flows: np.ndarray
    compartments: tuple
    flow_labels: tuple
    initial: np.ndarray = field(default=None)

    def __len__(self):
        return self.states.shape[0]

    def __getitem__(self, j) -> PathRecord:
        return PathRecord(self.times, self.states[j], self.flows[j], self.compartments, self.flow_labels)


def _validate_grid(t_grid, start):
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise InvalidArgumentError("time grid must be a nonempty 1-d array")
    if np.any(np.diff(t_grid) <= 0):
        raise InvalidArgumentError("time grid must be strictly increasing")
    if t_grid[0] < start - _DIVIDE_TOL:
        raise InvalidArgumentError(f"time grid starts at {t_grid[0]} before initial time {start}")
    return t_grid


def _count_steps(start, t_grid, delta):
    pts = np.concatenate([[start], t_grid])
    return int(sum(len(substep_times(a, b, delta)) - 1 for a, b in zip(pts[:-1], pts[1:])))


def simulate_paths(
    model: CompartmentModel,
    x0,
    theta: Mapping[str, float],
    t_grid,
    config: EulerConfig,
    stream: RngStream,
    n_paths: int = 1,
    workers: int = 1,
) -> PathEnsemble:
    """Simulate `n_paths` independent paths from a common initial state.

    Paths are split into fixed-size blocks, block ``b`` drawing from
    ``stream.derive(b)``, so the output is the same for any `workers`.
    """
    if not isinstance(x0, StateVector):
        x0 = StateVector(x0, 0.0)
    if n_paths < 1:
        raise InvalidArgumentError("n_paths must be >= 1")
    t_grid = _validate_grid(t_grid, x0.time)
    if _count_steps(x0.time, t_grid, config.delta) > config.max_steps:
        raise InvalidArgumentError(f"simulation needs more than max_steps={config.max_steps} Euler steps")
    th = _theta_rows(theta, None, n_paths)
    X = np.tile(x0.counts, (n_paths, 1))
    X = model.initialize(X, th, x0.time)
    blocks = _blocks(n_paths)
    gens = [stream.derive(b).generator for b in range(len(blocks))]
    F = len(model.flows) + len(model.inflows)

    def run(b):
        sl = blocks[b]
        Xb = X[sl]
        tb = {k: v[sl] for k, v in th.items()}
        times, states, flows = [], [], []
        cum = np.zeros((Xb.shape[0], F), dtype=np.int64)
        t = x0.time

        def rec(tt, XX, tot):
            times.append(tt)
            states.append(XX)
            flows.append(cum + tot)

        for tg in t_grid:
            if tg <= t + 0.0 and not states:
                rec(t, Xb, np.zeros_like(cum))
                continue
            Xb, tot = _advance(
                model, Xb, t, float(tg), tb, config, gens[b], rec if config.record_substeps else None
            )
            cum = cum + tot
            if not config.record_substeps:
                times.append(float(tg))
                states.append(Xb)
                flows.append(cum)
            t = float(tg)
        return np.array(times), np.stack(states, axis=1), np.stack(flows, axis=1)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(blocks))))
    else:
        parts = [run(b) for b in range(len(blocks))]
    return PathEnsemble(
        times=parts[0][0],
        states=np.concatenate([p[1] for p in parts], axis=0),
        flows=np.concatenate([p[2] for p in parts], axis=0),
        compartments=model.compartments,
        flow_labels=model.flow_labels,
        initial=X,
    )


def simulate_path(model, x0, theta, t_grid, config: EulerConfig, stream: RngStream) -> PathRecord:
    """Simulate a single path and record it at each point of `t_grid`."""
    return simulate_paths(model, x0, theta, t_grid, config, stream, n_paths=1)[0]


def gillespie_simulate(
    model: CompartmentModel,
    x0,
    theta: Mapping[str, float],
    t_end: float,
    stream: RngStream,
    rate_bounds=None,
    max_events: int = 10_000_000,
) -> PathRecord:
    """Exact event-driven simulation of a noise-free model.

    Autonomous models use the direct method.  Otherwise `rate_bounds` must
    give, per flow, an upper bound on its per-capita rate over the run, and
    events are proposed at the bounding rate and thinned.  Models with gamma
    noise or scheduled inflows are rejected.
    """
    if not isinstance(x0, StateVector):
        x0 = StateVector(x0, 0.0)
    th = {k: np.atleast_1d(np.asarray(v, dtype=float)) for k, v in theta.items()}
    if not model.is_poisson_system(th):
        raise UnsupportedModelError("exact simulation requires every noise variance to be zero")
    if model.inflows:
        raise UnsupportedModelError("exact simulation does not support scheduled inflows")
    if rate_bounds is None and not model.autonomous:
        raise UnsupportedModelError(
            "model is not declared autonomous; supply per-flow rate_bounds for thinning"
        )
    if rate_bounds is not None:
        rate_bounds = np.asarray(rate_bounds, dtype=float)
        if rate_bounds.shape != (len(model.flows),) or np.any(rate_bounds < 0):
            raise InvalidArgumentError("rate_bounds needs one nonnegative bound per flow")
    if t_end < x0.time:
        raise InvalidArgumentError("t_end precedes the initial time")

    gen = stream.generator
    src, dst = model._flow_src, model._flow_dst
    F = len(model.flows)
    t = x0.time
    X = x0.counts.copy()
    N = np.zeros(F, dtype=np.int64)
    times, states, flows = [t], [X.copy()], [N.copy()]
    for _ in range(max_events):
        if rate_bounds is None:
            mu = model.flow_rates(t, X[None, :], th)[0]
            a = mu * X[src]
            total = a.sum()
            if total <= 0:
                break
            t_next = t + gen.exponential(1.0 / total)
            if t_next > t_end:
                break
            t = t_next
            k = int(np.searchsorted(np.cumsum(a), gen.random() * total, side="right"))
            k = min(k, F - 1)
        else:
            bound = rate_bounds * X[src]
            total = bound.sum()
            if total <= 0:
                break
            t_next = t + gen.exponential(1.0 / total)
            if t_next > t_end:
                break
            t = t_next
            mu = model.flow_rates(t, X[None, :], th)[0]
            if np.any(mu > rate_bounds * (1 + 1e-12)):
                bad = int(np.argmax(mu - rate_bounds))
                raise InvalidArgumentError(
                    f"rate of flow {model.flows[bad].label} exceeds its bound at t={t}"
                )
            a = mu * X[src]
            u = gen.random() * total
            cs = np.cumsum(a)
            if u >= cs[-1]:
                continue
            k = int(np.searchsorted(cs, u, side="right"))
        X[src[k]] -= 1
        X[dst[k]] += 1
        N[k] += 1
        times.append(t)
        states.append(X.copy())
        flows.append(N.copy())
    else:
        raise InvalidArgumentError(f"exceeded max_events={max_events}")
    if times[-1] < t_end:
        times.append(float(t_end))
        states.append(X.copy())
        flows.append(N.copy())
    return PathRecord(
        np.array(times), np.array(states), np.array(flows), model.compartments, model.flow_labels
    )


def pi_oracle(n: int, x: int, mu: float, sigma2: float, delta: float) -> float:
    """First-order-in-`delta` probability that `n` of `x` individuals move.

    Single flow with gamma noise of infinitesimal variance `sigma2`:
    ``1{n=0} + delta * C(x,n) * sum_k C(n,k) (-1)^(n-k+1) log(1 + sigma2 mu (x-k)) / sigma2``.
    """
    n, x = int(n), int(x)
    if x < 0 or n < 0 or n > x:
        raise InvalidArgumentError(f"need 0 <= n <= x, got n={n}, x={x}")
    if mu < 0 or sigma2 <= 0 or delta <= 0:
        raise InvalidArgumentError("need mu >= 0, sigma2 > 0 and delta > 0")
    terms = [
        math.comb(n, k) * (-1) ** (n - k + 1) * math.log1p(sigma2 * mu * (x - k)) / sigma2
        for k in range(n + 1)
    ]
    return (1.0 if n == 0 else 0.0) + delta * math.comb(x, n) * math.fsum(terms)
