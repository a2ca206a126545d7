"""Regenerate the synthetic fixture files in src/stochcomp/datasets.

Covariates come from the closed-form synthetic series; case counts are
simulated from the bundled configurations with the command-line tool.
"""

import shutil
import tempfile
from pathlib import Path

from stochcomp import cli, io
from stochcomp.models import synthetic_cholera_covariates, synthetic_measles_covariates

OUT = Path(__file__).resolve().parents[1] / "src" / "stochcomp" / "datasets"
NOTE = "synthetic fixture, not real data"


def covariates(table, path):
    names, rows = table.to_rows()
    io.write_table(path, ["time"] + names, rows, comment=NOTE)


def cases(config, target):
    with tempfile.TemporaryDirectory() as tmp:
        status = cli.run(["simulate", "--config", str(OUT / config), "--out-dir", tmp])
        if status:
            raise SystemExit(status)
        shutil.copy(Path(tmp) / "observations.csv", OUT / target)


if __name__ == "__main__":
    covariates(synthetic_measles_covariates(), OUT / "measles_covariates.csv")
    covariates(synthetic_cholera_covariates(), OUT / "cholera_covariates.csv")
    cases("sir.ini", "sir_cases.csv")
    cases("measles.ini", "measles_cases.csv")
    cases("cholera.ini", "cholera_cases.csv")
