import json
import shutil
from pathlib import Path

import pytest

import stochcomp
from stochcomp.cli import run

DATASETS = Path(stochcomp.__file__).parent / "datasets"


@pytest.fixture
def sir_cfg(tmp_path):
    """A fast copy of the bundled SIR configuration."""
    shutil.copy(DATASETS / "sir_cases.csv", tmp_path)
    text = (DATASETS / "sir.ini").read_text()
    text = text.replace("particles = 1000", "particles = 200").replace("M = 20", "M = 2")
    text = text.replace("n = 11", "n = 5").replace("n = 9", "n = 5")
    p = tmp_path / "sir.ini"
    p.write_text(text)
    return p


def _files(d):
    return {p.name: p.read_bytes() for p in Path(d).iterdir() if p.name != "manifest.json"}


def _err(capsys):
    lines = capsys.readouterr().err.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("error code=")
    return lines[0]


def test_pfilter_is_reproducible(sir_cfg, tmp_path):
    assert run(["pfilter", "--config", str(sir_cfg), "--out-dir", str(tmp_path / "a")]) == 0
    assert run(["pfilter", "--config", str(sir_cfg), "--out-dir", str(tmp_path / "b")]) == 0
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert set(a) == {"filter.csv", "filter_summary.csv"} and a == b
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["seed"] == 20240101 and len(man["outputs"]) == 2


def test_seed_precedence(sir_cfg, tmp_path):
    run(["pfilter", "--config", str(sir_cfg), "--out-dir", str(tmp_path / "cfg")])
    run(["pfilter", "--config", str(sir_cfg), "--out-dir", str(tmp_path / "flag"), "--seed", "20240101"])
    run(["pfilter", "--config", str(sir_cfg), "--out-dir", str(tmp_path / "other"), "--seed", "5"])
    assert _files(tmp_path / "cfg") == _files(tmp_path / "flag") != _files(tmp_path / "other")
    sir_cfg.write_text(sir_cfg.read_text().replace("seed = 20240101\n", ""))
    run(["pfilter", "--config", str(sir_cfg), "--out-dir", str(tmp_path / "dflt")])
    run(["pfilter", "--config", str(sir_cfg), "--out-dir", str(tmp_path / "zero"), "--seed", "0"])
    assert _files(tmp_path / "dflt") == _files(tmp_path / "zero")


def test_mif_outputs(sir_cfg, tmp_path):
    assert run(["mif", "--config", str(sir_cfg), "--out-dir", str(tmp_path)]) == 0
    head = (tmp_path / "mif_trace.csv").read_text().splitlines()
    assert head[0].startswith("iteration,loglik,beta,gamma") and len(head) == 3


def test_mif_zero_iterations(sir_cfg, tmp_path, capsys):
    sir_cfg.write_text(sir_cfg.read_text().replace("M = 2", "M = 0"))
    assert run(["mif", "--config", str(sir_cfg), "--out-dir", str(tmp_path)]) == 2
    assert "code=CONFIG" in _err(capsys)


def test_simulate_and_slice_and_profile(sir_cfg, tmp_path):
    assert run(["simulate", "--config", str(sir_cfg), "--out-dir", str(tmp_path / "s")]) == 0
    obs = (tmp_path / "s" / "observations.csv").read_text()
    assert obs.startswith("#") and "time,cases" in obs
    assert run(["slice", "--config", str(sir_cfg), "--out-dir", str(tmp_path / "sl"), "--data", str(tmp_path / "s" / "observations.csv")]) == 0
    assert (tmp_path / "sl" / "slice_beta.csv").exists() and (tmp_path / "sl" / "slice_summary.csv").exists()
    assert run(["profile", "--config", str(sir_cfg), "--out-dir", str(tmp_path / "pr")]) == 0
    assert (tmp_path / "pr" / "profile_ci.csv").exists()


def test_oracle_pi(tmp_path, capsys):
    args = ["oracle-pi", "--x", "3", "--mu", "0.5", "--sigma2", "1", "--delta", "0.01", "--out-dir", str(tmp_path)]
    assert run(args) == 0
    rows = (tmp_path / "pi.csv").read_text().splitlines()
    assert rows[0] == "n,pi" and len(rows) == 5
    assert float(rows[1].split(",")[1]) == pytest.approx(0.9908371, abs=5e-8)
    assert sum(float(r.split(",")[1]) for r in rows[1:]) == pytest.approx(1.0, abs=1e-12)
    capsys.readouterr()
    assert run(["oracle-pi", "--x", "3", "--mu", "-1", "--sigma2", "1", "--delta", "0.01", "--out-dir", str(tmp_path)]) == 2
    _err(capsys)


@pytest.mark.parametrize(
    "argv,code,tag",
    [
        (["bogus"], 2, "USAGE"),
        (["pfilter"], 2, "USAGE"),
        (["pfilter", "--config", "/nonexistent/x.ini"], 4, "IO"),
    ],
)
def test_exit_codes(argv, code, tag, tmp_path, capsys):
    assert run(argv + ["--out-dir", str(tmp_path)] if len(argv) > 1 else argv) == code
    assert f"code={tag}" in _err(capsys)


def test_missing_data_file(sir_cfg, tmp_path, capsys):
    assert run(["pfilter", "--config", str(sir_cfg), "--data", str(tmp_path / "none.csv"), "--out-dir", str(tmp_path)]) == 4
    _err(capsys)


def test_bad_data_is_validation(sir_cfg, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,cases\n2,1\n2,3\n")
    assert run(["pfilter", "--config", str(sir_cfg), "--data", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert "bad.csv:3" in _err(capsys)


def test_filtering_failure_is_runtime(sir_cfg, tmp_path, capsys):
    sir_cfg.write_text(sir_cfg.read_text().replace("beta = 0.6", "beta = 0.0").replace("[params]", "[init]\nI = 0\n[params]"))
    assert run(["pfilter", "--config", str(sir_cfg), "--out-dir", str(tmp_path)]) == 3
    assert "code=FILTERING_FAILURE" in _err(capsys)


def test_unknown_param_suggestion(sir_cfg, tmp_path, capsys):
    sir_cfg.write_text(sir_cfg.read_text().replace("beta = 0.6", "betta = 0.6"))
    assert run(["pfilter", "--config", str(sir_cfg), "--out-dir", str(tmp_path)]) == 2
    assert "did you mean 'beta'" in _err(capsys)
