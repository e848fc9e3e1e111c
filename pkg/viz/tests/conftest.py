"""Fixture CSVs generated once per session through the simulator CLI.

The viz package consumes the primary only through its file interfaces;
these fixtures are real (small) runs of each producing subcommand.
"""

import subprocess
import sys

import pytest


def _run_cli(args):
    proc = subprocess.run([sys.executable, "-m", "loopfield.cli"] + args,
                          capture_output=True)
    assert proc.returncode == 0, proc.stderr.decode()


@pytest.fixture(scope="session")
def fixtures_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("csv_fixtures")

    _run_cli(["sample-occupation", "--theta", "0.5", "--mesh", "12",
              "--replicas", "400", "--seed", "1",
              "--out", str(root / "occupation.csv")])
    _run_cli(["crossing", "--theta", "0.5", "--mesh", "16",
              "--r-list", "e-1.2,e-1.7,e-2.3", "--replicas", "150",
              "--seed", "2", "--out", str(root / "crossing.csv")])
    _run_cli(["zgamma", "--theta", "0.5", "--mesh", "16",
              "--gamma-list", "0.6,0.9,1.3", "--replicas", "250",
              "--seed", "3", "--out", str(root / "zgamma.csv")])
    _run_cli(["martingale1d", "--theta", "0.3", "--n", "1",
              "--times", "0.1,0.2,0.4", "--dt", "0.002",
              "--replicas", "400", "--seed", "4",
              "--out", str(root / "martingale.csv")])
    _run_cli(["duality1d", "--theta", "0.3", "--x", "0.2", "--y", "0.4",
              "--dt", "0.004", "--replicas", "400", "--seed", "5",
              "--out", str(root / "duality.csv")])
    _run_cli(["wick-cov", "--theta", "0.5", "--n", "1", "--m", "1",
              "--mesh", "12", "--replicas", "400", "--seed", "6",
              "--out", str(root / "wickcov.csv")])
    return root
