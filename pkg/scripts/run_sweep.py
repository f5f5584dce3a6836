"""Oscillating-family sweep: bounds per eps and fitted exponents, written to CSV and .dat.

Usage: python scripts/run_sweep.py [extra lifespan flags, e.g. --grid 64 --out out/sweep64]
"""

import csv
import sys
from pathlib import Path

from lifespan.cli import main

HERE = Path(__file__).resolve().parent

# nominal exponents at alpha = 3/4 for the quantities fitted against eps
TARGETS = {"norm_f_bsig": "sigma", "q0": "-0.25", "q1": "1.75", "t_fp": "2", "t_l": "<= -1.2"}


def show_fits(out: Path):
    with open(out / "fits.csv") as fh:
        for row in csv.DictReader(fh):
            target = TARGETS.get(row["quantity"], "")
            if target == "sigma":
                target = row["param"]
            print(f"{row['quantity']:>14} {row['param']:>5}  slope {float(row['slope']):+.4f}"
                  f"  r2 {float(row['r2']):.4f}  nominal {target}")


if __name__ == "__main__":
    args = ["sweep", "--config", str(HERE / "sweep.ini"), "-v", *sys.argv[1:]]
    code = main(args)
    if code == 0:
        out = Path(sys.argv[sys.argv.index("--out") + 1]) if "--out" in sys.argv else Path("out/sweep")
        show_fits(out)
    sys.exit(code)
