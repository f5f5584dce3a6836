"""Solver runs on the reference flows with their ledger checks.

Usage: python scripts/run_solver_checks.py [--grid 32] [--out out/solve]
"""

import argparse
import csv
import sys
import tempfile
from pathlib import Path

from lifespan.cli import main

RUNS = {
    "shear": "[solver]\ndt = 1e-3\nt_end = 1.0\nsample_every = 100\n",
    "fixture": "[solver]\ndt = 1e-3\nt_end = 0.5\nsample_every = 10\n",
    "taylor-green": "[solver]\ndt = 1e-3\nt_end = 0.5\nsample_every = 10\n",
}


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", default="32")
    ap.add_argument("--out", default="out/solve")
    opts = ap.parse_args()
    worst = 0
    with tempfile.TemporaryDirectory() as tmp:
        for name, text in RUNS.items():
            cfg = Path(tmp) / f"{name}.ini"
            cfg.write_text(text)
            out = Path(opts.out) / name
            code = main(["solve", "--config", str(cfg), "--grid", opts.grid, "--data", name, "--out", str(out)])
            worst = max(worst, code)
            print(f"== {name} (exit {code})")
            with open(out / "checks.csv") as fh:
                for row in csv.DictReader(fh):
                    print(f"  {'PASS' if row['pass'] == 'true' else 'FAIL'} {row['check']:<22} {row['value']}")
    sys.exit(worst)
