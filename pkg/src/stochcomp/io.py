"""File formats: observation series, run configuration, results, manifests.

All tables are comma-separated with a header row.  Floats are written with
``repr`` (shortest string that round-trips to the same double).  Lines
starting with ``#`` in input tables are comments.
"""

from __future__ import annotations

import configparser
import csv
import difflib
import hashlib
import json
import math
import os
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .covariates import CovariateTable
from .data import ObservedSeries
from .exceptions import ConfigError, DataParseError, InvalidArgumentError
from .mif import MifResult
from .simulate import PathRecord
from .smc import FilterResult

__all__ = [
    "load_timeseries",
    "write_timeseries",
    "load_covariates",
    "RunConfig",
    "load_config",
    "parse_config",
    "CONFIG_SCHEMA",
    "write_table",
    "write_results",
    "RunManifest",
    "file_digest",
]

MISSING_TOKENS = ("", "NA", "nan", "NaN")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v)


def _read_rows(path):
    """Yield ``(line_number, fields)`` for non-comment, non-blank lines."""
    path = Path(path)
    with path.open(newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, next(csv.reader([line]))


def _parse_table(path):
    rows = _read_rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise DataParseError(f"{path}: empty file") from None
    header = [h.strip() for h in header]
    if len(header) < 2:
        raise DataParseError(f"{path}:{lineno}: need a time column and at least one data column")
    if len(set(header)) != len(header):
        raise DataParseError(f"{path}:{lineno}: duplicate column names")
    body = []
    for lineno, fields in rows:
        if len(fields) != len(header):
            raise DataParseError(f"{path}:{lineno}: expected {len(header)} fields, found {len(fields)}")
        body.append((lineno, [f.strip() for f in fields]))
    if not body:
        raise DataParseError(f"{path}: no data rows")
    return header, body


def _parse_time(path, lineno, s, prev):
    try:
        t = float(s)
    except ValueError:
        raise DataParseError(f"{path}:{lineno}: time {s!r} is not a number") from None
    if not math.isfinite(t):
        raise DataParseError(f"{path}:{lineno}: time must be finite")
    if prev is not None and t <= prev:
        kind = "duplicate" if t == prev else "decreasing"
        raise DataParseError(f"{path}:{lineno}: {kind} time {s}; times must be strictly increasing")
    return t


def load_timeseries(path, allow_missing: bool = False) -> ObservedSeries:
    """Read an observation table: ``time,<channel>...`` with count values.

    Empty cells or ``NA`` are missing values, accepted only when
    `allow_missing` is set.
    """
    header, body = _parse_table(path)
    times, values = [], []
    prev = None
    for lineno, fields in body:
        t = _parse_time(path, lineno, fields[0], prev)
        row = []
        for name, s in zip(header[1:], fields[1:]):
            if s in MISSING_TOKENS:
                if not allow_missing:
                    raise DataParseError(
                        f"{path}:{lineno}: missing value in column {name!r} (enable the missing-value policy to allow)"
                    )
                row.append(np.nan)
                continue
            try:
                v = float(s)
            except ValueError:
                raise DataParseError(f"{path}:{lineno}: {name}={s!r} is not a number") from None
            if not (math.isfinite(v) and v >= 0 and v == round(v)):
                raise DataParseError(f"{path}:{lineno}: {name}={s} is not a nonnegative integer count")
            row.append(v)
        times.append(t)
        values.append(row)
        prev = t
    return ObservedSeries(np.array(times), np.array(values), tuple(header[1:]))


def write_timeseries(series: ObservedSeries, path, comment: str | None = None) -> Path:
    rows = []
    for t, row in zip(series.times, series.values):
        rows.append([t] + ["NA" if np.isnan(v) else v for v in row])
    return write_table(path, ("time",) + tuple(series.names), rows, comment=comment)


def load_covariates(path) -> CovariateTable:
    """Read a covariate table ``time,<name>...`` of real values."""
    header, body = _parse_table(path)
    times, cols = [], []
    prev = None
    for lineno, fields in body:
        t = _parse_time(path, lineno, fields[0], prev)
        try:
            row = [float(s) for s in fields[1:]]
        except ValueError:
            raise DataParseError(f"{path}:{lineno}: covariate values must be numbers") from None
        times.append(t)
        cols.append(row)
        prev = t
    cols = np.array(cols)
    return CovariateTable(np.array(times), {h: cols[:, k] for k, h in enumerate(header[1:])})


def write_table(path, header, rows, comment: str | None = None) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


# --- configuration -------------------------------------------------------

_INT, _FLOAT, _STR, _BOOL, _LIST = "int", "float", "str", "bool", "list"

#: section -> key -> type; sections marked "*" accept free names of the given type
CONFIG_SCHEMA = {
    "run": {
        "model": _STR,
        "seed": _INT,
        "t0": _FLOAT,
        "data": _STR,
        "covariates": _STR,
        "allow_missing": _BOOL,
    },
    "params": ("*", _FLOAT),
    "init": ("*", _INT),
    "transforms": ("*", _STR),
    "rw_sd": ("*", _FLOAT),
    "ivp_sd": ("*", _FLOAT),
    "euler": {"delta": _FLOAT},
    "filter": {"particles": _INT, "resampler": _STR},
    "mif": {"M": _INT, "a": _FLOAT, "b": _FLOAT, "L": _INT, "particles": _INT},
    "simulate": {"t_end": _FLOAT, "interval": _FLOAT, "n_paths": _INT},
    "slice": {"parameters": _LIST, "width": _FLOAT, "n": _INT, "reps": _INT, "span": _FLOAT},
    "profile": {
        "parameter": _STR,
        "lower": _FLOAT,
        "upper": _FLOAT,
        "n": _INT,
        "level": _FLOAT,
        "span": _FLOAT,
        "reps": _INT,
    },
}

REQUIRED = {"run": ("model",)}


def _suggest(word, options):
    close = difflib.get_close_matches(word, list(options), n=1)
    return f"; did you mean {close[0]!r}?" if close else ""


def _convert(section, key, raw, kind):
    where = f"[{section}] {key}"
    try:
        if kind == _INT:
            try:
                return int(raw)
            except ValueError:
                v = float(raw)
                if v != int(v):
                    raise
                return int(v)
        if kind == _FLOAT:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        if kind == _BOOL:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if kind == _LIST:
            return tuple(s.strip() for s in raw.split(",") if s.strip())
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{where}: expected {kind}, got {raw!r}") from None


@dataclass
class RunConfig:
    """Validated run configuration; sections map to attributes."""

    model: str
    seed: int | None = None
    t0: float | None = None
    data: str | None = None
    covariates: str | None = None
    allow_missing: bool = False
    params: dict = field(default_factory=dict)
    init: dict = field(default_factory=dict)
    transforms: dict = field(default_factory=dict)
    rw_sd: dict = field(default_factory=dict)
    ivp_sd: dict = field(default_factory=dict)
    euler: dict = field(default_factory=dict)
    filter: dict = field(default_factory=dict)
    mif: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    slice: dict = field(default_factory=dict)
    profile: dict = field(default_factory=dict)
    digest: str = ""
    source: str | None = None

    def resolve_path(self, p):
        """Relative paths are taken relative to the config file."""
        if p is None or self.source is None or os.path.isabs(p):
            return p
        return str(Path(self.source).parent / p)


def _check_values(cfg: RunConfig):
    mif = cfg.mif
    if "a" in mif and not 0 < mif["a"] < 1:
        raise ConfigError(f"[mif] a: cooling factor must lie in (0, 1), got {mif['a']}")
    if "M" in mif and mif["M"] < 1:
        raise ConfigError(f"[mif] M: need at least one iteration, got {mif['M']}")
    if "L" in mif and mif["L"] < 1:
        raise ConfigError(f"[mif] L: lag must be >= 1, got {mif['L']}")
    if "b" in mif and not mif["b"] > 0:
        raise ConfigError(f"[mif] b: must be > 0, got {mif['b']}")
    for sec in ("filter", "mif"):
        if getattr(cfg, sec).get("particles", 2) < 2:
            raise ConfigError(f"[{sec}] particles: need at least 2")
    if "delta" in cfg.euler and not cfg.euler["delta"] > 0:
        raise ConfigError("[euler] delta: must be > 0")
    for sec in ("rw_sd", "ivp_sd"):
        for k, v in getattr(cfg, sec).items():
            if v < 0:
                raise ConfigError(f"[{sec}] {k}: standard deviation must be >= 0")
    for k, v in cfg.transforms.items():
        if v not in ("identity", "log", "logit"):
            raise ConfigError(f"[transforms] {k}: unknown transform {v!r}{_suggest(v, ('identity', 'log', 'logit'))}")
    if cfg.seed is not None and not 0 <= cfg.seed < 2**64:
        raise ConfigError("[run] seed: must be a nonnegative 64-bit integer")
    prof = cfg.profile
    if "level" in prof and not 0 < prof["level"] < 1:
        raise ConfigError("[profile] level: must lie in (0, 1)")
    if {"lower", "upper"} <= set(prof) and not prof["lower"] < prof["upper"]:
        raise ConfigError("[profile] lower must be below upper")
    for sec in ("slice", "profile", "simulate"):
        for k in ("n", "reps", "n_paths"):
            if k in getattr(cfg, sec) and getattr(cfg, sec)[k] < 1:
                raise ConfigError(f"[{sec}] {k}: must be >= 1")
    for sec in ("slice", "profile"):
        # the local quadratic smoother needs five points
        if getattr(cfg, sec).get("n", 5) < 5:
            raise ConfigError(f"[{sec}] n: need at least 5 grid points")


def parse_config(text: str, source: str | None = None) -> RunConfig:
    """Parse and validate configuration text; see :data:`CONFIG_SCHEMA`."""
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}".replace("\n", " ")) from None
    values = {}
    for section in cp.sections():
        if section not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown section [{section}]{_suggest(section, CONFIG_SCHEMA)}")
        schema = CONFIG_SCHEMA[section]
        out = {}
        for key, raw in cp.items(section):
            if isinstance(schema, tuple):
                kind = schema[1]
            elif key in schema:
                kind = schema[key]
            else:
                raise ConfigError(f"[{section}] unknown key {key!r}{_suggest(key, schema)}")
            out[key] = _convert(section, key, raw, kind)
        values[section] = out
    for section, keys in REQUIRED.items():
        for k in keys:
            if k not in values.get(section, {}):
                raise ConfigError(f"[{section}] missing required key {k!r}")
    run = values.pop("run")
    cfg = RunConfig(
        **run,
        **values,
        digest=hashlib.sha256(text.encode()).hexdigest(),
        source=source,
    )
    _check_values(cfg)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    text = path.read_text()
    return parse_config(text, source=str(path))


# --- results -------------------------------------------------------------


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_filter(result: FilterResult, out: Path, prefix: str):
    rows = [[n + 1, t, c, e] for n, (t, c, e) in enumerate(zip(result.times, result.cond_logliks, result.ess))]
    f1 = write_table(out / f"{prefix}filter.csv", ("n", "time", "cond_loglik", "ess"), rows)
    f2 = write_table(
        out / f"{prefix}filter_summary.csv",
        ("loglik", "n_particles", "n_obs"),
        [[result.loglik, result.n_particles, len(result.times)]],
    )
    return [f1, f2]


def _write_mif(result: MifResult, out: Path, prefix: str):
    names = list(result.param_names)
    rows = [[m + 1, ll] + list(th) for m, (ll, th) in enumerate(zip(result.loglik_trace, result.theta_trace))]
    f1 = write_table(out / f"{prefix}mif_trace.csv", ["iteration", "loglik"] + names, rows)
    est = [[k, result.theta_hat[k], int(k in result.estimated)] for k in names]
    f2 = write_table(out / f"{prefix}mif_estimates.csv", ("parameter", "value", "estimated"), est)
    files = [f1, f2]
    if result.last_filter is not None:
        comps = result.last_filter.compartments
        files.append(
            write_table(out / f"{prefix}mif_initial_state.csv", ("compartment", "value"), list(zip(comps, result.x_hat)))
        )
    return files


def _write_path(result: PathRecord, out: Path, prefix: str):
    header = ["time"] + list(result.compartments) + list(result.flow_labels)
    rows = [[t] + list(s) + list(f) for t, s, f in zip(result.times, result.states, result.flows)]
    return [write_table(out / f"{prefix}path.csv", header, rows)]


def write_results(result, out_dir, prefix: str = "") -> list:
    """Write a result object as CSV files in `out_dir`; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(result, FilterResult):
        return _write_filter(result, out, prefix)
    if isinstance(result, MifResult):
        return _write_mif(result, out, prefix)
    if isinstance(result, PathRecord):
        return _write_path(result, out, prefix)
    if isinstance(result, ObservedSeries):
        return [write_timeseries(result, out / f"{prefix}observations.csv")]
    raise InvalidArgumentError(f"cannot write results of type {type(result).__name__}")


@dataclass
class RunManifest:
    """Provenance record written next to the outputs of a run."""

    command: str
    argv: list
    seed: int
    threads: int
    config_digest: str | None
    wall_clock: float = 0.0
    outputs: list = field(default_factory=list)

    def add(self, path):
        self.outputs.append(Path(path))

    def to_dict(self):
        import scipy

        from . import __version__

        return {
            "command": self.command,
            "argv": list(self.argv),
            "seed": self.seed,
            "threads": self.threads,
            "config_digest": self.config_digest,
            "versions": {
                "stochcomp": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "wall_clock_seconds": self.wall_clock,
            "outputs": [{"file": p.name, "sha256": file_digest(p)} for p in sorted(self.outputs)],
        }

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / "manifest.json"
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        return path
