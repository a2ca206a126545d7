"""Command-line interface.

Usage::

    stochcomp <subcommand> --config run.ini [--data obs.csv] [--out-dir DIR]
              [--seed N] [--threads N]

Subcommands: simulate, pfilter, mif, slice, profile, oracle-pi.  Exit codes:
0 success, 2 validation error, 3 runtime or filtering failure, 4 I/O error.
Failures print one line ``error code=<CODE> message="<text>"`` to stderr.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .data import ObservedSeries
from .datagen import simulate_observations
from .exceptions import InvalidArgumentError, StochCompError
from .likelihood import SliceSpec, fisher_information, local_quadratic_fit, profile_from_values, standard_errors
from .mif import MifConfig, mif_run
from .registry import build_setup
from .rng import RngStream
from .simulate import EulerConfig, pi_oracle, simulate_paths
from .smc import particle_filter

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4
DEFAULT_SEED = 0
DEFAULT_J = 1000


class _ArgumentError(InvalidArgumentError):
    code = "USAGE"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgumentError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stochcomp", description="Simulation and inference for stochastic compartment models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, helptext in (
        ("simulate", "simulate latent paths and synthetic observations"),
        ("pfilter", "particle filter log likelihood"),
        ("mif", "maximum likelihood by iterated filtering"),
        ("slice", "likelihood slices through the parameter vector"),
        ("profile", "profile likelihood and confidence interval for one parameter"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--data", help="observation table (overrides [run] data)")
        _common(p)
    p = sub.add_parser("oracle-pi", help="exact one-step transition law of a single noisy flow")
    p.add_argument("--config", help="unused; accepted for uniformity")
    p.add_argument("--data", help="unused; accepted for uniformity")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--sigma2", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    _common(p)
    return parser


def _common(p):
    p.add_argument("--out-dir", default="stochcomp-out", help="directory for result files")
    p.add_argument("--seed", type=int, help="root seed (overrides the config)")
    p.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")


# --- subcommands ---------------------------------------------------------


def _load(args):
    cfg = io.load_config(args.config)
    cov = None
    if cfg.covariates:
        cov = io.load_covariates(cfg.resolve_path(cfg.covariates))
    setup = build_setup(cfg.model, cfg.params, cfg.init, cfg.t0, cov, cfg.transforms)
    delta = cfg.euler.get("delta", setup.delta)
    seed = args.seed if args.seed is not None else (cfg.seed if cfg.seed is not None else DEFAULT_SEED)
    return cfg, setup, EulerConfig(delta), seed


def _data(args, cfg) -> ObservedSeries:
    path = args.data or cfg.resolve_path(cfg.data)
    if not path:
        raise InvalidArgumentError("no observations: pass --data or set [run] data")
    data = io.load_timeseries(path, allow_missing=cfg.allow_missing)
    return data


def _check_channels(setup, data):
    if tuple(data.names) != tuple(setup.measurement.channels):
        raise InvalidArgumentError(
            f"data columns {list(data.names)} do not match the model's channels {list(setup.measurement.channels)}"
        )


def cmd_simulate(args):
    cfg, setup, euler, seed = _load(args)
    sim = cfg.simulate
    for k in ("t_end", "interval"):
        if k not in sim:
            raise InvalidArgumentError(f"[simulate] missing required key {k!r}")
    t0 = setup.x0.time
    if not sim["t_end"] > t0 or not sim["interval"] > 0:
        raise InvalidArgumentError("[simulate] need t_end after the start time and interval > 0")
    n_obs = int(np.floor((sim["t_end"] - t0) / sim["interval"] + 1e-9))
    if n_obs < 1:
        raise InvalidArgumentError("[simulate] interval longer than the simulated span")
    grid = t0 + sim["interval"] * np.arange(n_obs + 1)
    n_paths = sim.get("n_paths", 1)
    root = RngStream(seed)
    ens = simulate_paths(setup.model, setup.x0, setup.theta, grid, euler, root.derive(0), n_paths, args.threads)
    files = []
    for k in range(n_paths):
        prefix = "" if n_paths == 1 else f"{k:04d}_"
        path = ens[k]
        files += io.write_results(path, args.out_dir, prefix)
        y = simulate_observations(path, setup.model, setup.measurement, setup.theta, root.derive(1, k))
        obs = ObservedSeries(grid[1:], y, setup.measurement.channels)
        files.append(
            io.write_timeseries(
                obs, Path(args.out_dir) / f"{prefix}observations.csv", comment=f"synthetic data simulated from model {cfg.model!r}"
            )
        )
    return files, seed, cfg


def _filter(setup, data, theta, J, euler, stream, cfg, threads):
    return particle_filter(
        setup.model,
        setup.measurement,
        data,
        theta,
        setup.x0,
        J,
        euler,
        stream,
        resampler=cfg.filter.get("resampler", "multinomial"),
        workers=threads,
    )


def cmd_pfilter(args):
    cfg, setup, euler, seed = _load(args)
    data = _data(args, cfg)
    _check_channels(setup, data)
    J = cfg.filter.get("particles", DEFAULT_J)
    res = _filter(setup, data, setup.theta, J, euler, RngStream(seed), cfg, args.threads)
    return io.write_results(res, args.out_dir), seed, cfg


def _mif_config(cfg, setup, theta, fixed=()):
    mc = cfg.mif
    if "M" not in mc or "a" not in mc:
        raise InvalidArgumentError("[mif] needs M and a")
    sig = {k: v for k, v in cfg.rw_sd.items() if k not in fixed}
    return MifConfig(
        J=mc.get("particles", cfg.filter.get("particles", DEFAULT_J)),
        M=mc["M"],
        a=mc["a"],
        b=mc.get("b", 1.0),
        L=mc.get("L", 1),
        theta_init=theta,
        x_init=setup.x0,
        sigma_theta=sig,
        sigma_init=cfg.ivp_sd,
        transform=setup.transform,
        resampler=cfg.filter.get("resampler", "multinomial"),
    )


def cmd_mif(args):
    cfg, setup, euler, seed = _load(args)
    data = _data(args, cfg)
    _check_channels(setup, data)
    mc = _mif_config(cfg, setup, setup.theta)
    res = mif_run(setup.model, setup.measurement, data, mc, RngStream(seed), euler=euler, workers=args.threads)
    return io.write_results(res, args.out_dir), seed, cfg


def cmd_slice(args):
    cfg, setup, euler, seed = _load(args)
    data = _data(args, cfg)
    _check_channels(setup, data)
    sc = cfg.slice
    names = list(setup.theta)
    params = sc.get("parameters") or tuple(cfg.rw_sd) or tuple(names)
    for p in params:
        if p not in setup.theta:
            raise InvalidArgumentError(f"[slice] unknown parameter {p!r}")
    width, n, reps, span = sc.get("width", 0.1), sc.get("n", 11), sc.get("reps", 1), sc.get("span", 0.6)
    if not width > 0:
        raise InvalidArgumentError("[slice] width must be > 0")
    J = cfg.filter.get("particles", DEFAULT_J)
    theta_hat = np.array([setup.theta[k] for k in names])
    root = RngStream(seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files, summary, conds, offs = [], [], [], []
    for s, p in enumerate(params):
        i = names.index(p)
        scale = abs(theta_hat[i]) if theta_hat[i] != 0 else 1.0
        z = np.linspace(-width * scale, width * scale, n if n % 2 else n + 1)
        spec = SliceSpec(i, z, reps=reps, span=span)
        ll = np.full((z.size, reps), np.nan)
        cl = np.full((z.size, reps, len(data)), np.nan)
        for j, dz in enumerate(z):
            th = dict(zip(names, theta_hat))
            th[p] = theta_hat[i] + dz
            for r in range(reps):
                # common random numbers across offsets within a replicate
                try:
                    res = _filter(setup, data, th, J, euler, root.derive(s, r), cfg, args.threads)
                except (StochCompError, ArithmeticError, ValueError):
                    continue
                ll[j, r], cl[j, r] = res.loglik, res.cond_logliks
        mean = np.nanmean(ll, axis=1) if np.any(np.isfinite(ll)) else np.full(z.size, np.nan)
        rows = [[theta_hat[i] + dz] + list(ll[j]) + [mean[j]] for j, dz in enumerate(z)]
        files.append(
            io.write_table(out / f"slice_{p}.csv", ["value"] + [f"loglik_{r + 1}" for r in range(reps)] + ["mean_loglik"], rows)
        )
        ok = np.isfinite(mean)
        argmax = np.nan
        if ok.sum() >= 3:
            fit = local_quadratic_fit(z[ok], mean[ok], span=spec.span, query=z)
            files.append(io.write_table(out / f"slice_{p}_smooth.csv", ("value", "fitted"), zip(theta_hat[i] + z, fit.fitted)))
            argmax = theta_hat[i] + fit.argmax
        conds.append(np.nanmean(cl, axis=1))
        offs.append(z)
        summary.append([p, theta_hat[i], argmax])
    se = np.full(len(params), np.nan)
    try:
        if all(np.all(np.isfinite(c)) for c in conds):
            se = standard_errors(fisher_information(conds, offs))
    except StochCompError:
        pass
    files.append(
        io.write_table(
            out / "slice_summary.csv",
            ("parameter", "value", "smoothed_argmax", "std_error"),
            [row + [e] for row, e in zip(summary, se)],
        )
    )
    return files, seed, cfg


def _logmeanexp(x):
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    if x.size == 0:
        return np.nan
    top = x.max()
    return float(top + np.log(np.mean(np.exp(x - top))))


def cmd_profile(args):
    cfg, setup, euler, seed = _load(args)
    data = _data(args, cfg)
    _check_channels(setup, data)
    pc = cfg.profile
    for k in ("parameter", "lower", "upper"):
        if k not in pc:
            raise InvalidArgumentError(f"[profile] missing required key {k!r}")
    p = pc["parameter"]
    if p not in setup.theta:
        raise InvalidArgumentError(f"[profile] unknown parameter {p!r}")
    grid = np.linspace(pc["lower"], pc["upper"], pc.get("n", 9))
    level, span, reps = pc.get("level", 0.99), pc.get("span", 0.6), pc.get("reps", 1)
    J = cfg.filter.get("particles", DEFAULT_J)
    maximise = bool(cfg.mif) and any(v > 0 for k, v in cfg.rw_sd.items() if k != p)
    root = RngStream(seed)
    names = list(setup.theta)
    values = np.full(grid.size, np.nan)
    thetas = np.full((grid.size, len(names)), np.nan)
    for g, val in enumerate(grid):
        th = dict(setup.theta)
        th[p] = float(val)
        try:
            if maximise:
                mc = _mif_config(cfg, setup, th, fixed=(p,))
                th = mif_run(setup.model, setup.measurement, data, mc, root.derive(g, 0), euler=euler, workers=args.threads).theta_hat
            lls = [_filter(setup, data, th, J, euler, root.derive(g, 1, r), cfg, args.threads).loglik for r in range(reps)]
        except (StochCompError, ArithmeticError, ValueError):
            continue
        values[g] = _logmeanexp(lls)
        thetas[g] = [th[k] for k in names]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [io.write_table(out / "profile.csv", ["value", "loglik"] + names, [[v, l] + list(t) for v, l, t in zip(grid, values, thetas)])]
    if np.isfinite(values).sum() < 3:
        raise StochCompError("profile has fewer than three successful evaluations")
    ok = np.isfinite(values)
    prof = profile_from_values(grid[ok], values[ok], level=level, span=span)
    files.append(io.write_table(out / "profile_smooth.csv", ("value", "fitted"), zip(prof.smooth.z, prof.smooth.fitted)))
    files.append(
        io.write_table(
            out / "profile_ci.csv",
            ("parameter", "level", "maximizer", "lower", "upper", "cutoff"),
            [[p, level, prof.maximizer, prof.ci[0], prof.ci[1], prof.cutoff]],
        )
    )
    return files, seed, cfg


def cmd_oracle_pi(args):
    if args.x < 0 or args.mu < 0 or args.sigma2 < 0 or not args.delta > 0:
        raise InvalidArgumentError("need x >= 0, mu >= 0, sigma2 >= 0 and delta > 0")
    rows = [[n, pi_oracle(n, args.x, args.mu, args.sigma2, args.delta)] for n in range(args.x + 1)]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    f = io.write_table(out / "pi.csv", ("n", "pi"), rows)
    for n, v in rows:
        print(f"{n},{v!r}")
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    return [f], seed, None


COMMANDS = {
    "simulate": cmd_simulate,
    "pfilter": cmd_pfilter,
    "mif": cmd_mif,
    "slice": cmd_slice,
    "profile": cmd_profile,
    "oracle-pi": cmd_oracle_pi,
}


def _exit_code(exc) -> int:
    if isinstance(exc, (OSError, UnicodeDecodeError)):
        return EXIT_IO
    if isinstance(exc, ValueError):
        return EXIT_VALIDATION
    return EXIT_RUNTIME


def _report(exc):
    code = getattr(exc, "code", None) or ("IO" if isinstance(exc, OSError) else type(exc).__name__.upper())
    msg = " ".join(str(exc).split()).replace('"', "'")
    print(f'error code={code} message="{msg}"', file=sys.stderr)


def run(argv=None) -> int:
    """Run the CLI and return the exit status instead of exiting."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise _ArgumentError("--threads must be >= 1")
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise _ArgumentError("--seed must be a nonnegative 64-bit integer")
        start = time.perf_counter()
        files, seed, cfg = COMMANDS[args.command](args)
        manifest = io.RunManifest(
            command=args.command,
            argv=argv,
            seed=seed,
            threads=args.threads,
            config_digest=cfg.digest if cfg is not None else None,
            wall_clock=time.perf_counter() - start,
        )
        for f in files:
            manifest.add(f)
        manifest.write(args.out_dir)
    except Exception as exc:  # noqa: BLE001
        if not isinstance(exc, (StochCompError, OSError, ArithmeticError, ValueError, RuntimeError)):
            raise
        _report(exc)
        return _exit_code(exc)
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
