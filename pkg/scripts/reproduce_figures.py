"""Write the CSV data behind every figure panel into one directory.

    python3 scripts/reproduce_figures.py [outdir]
"""
import sys
from pathlib import Path

from passive_pt.cli import main

RUNS = {
    "spectrum": ["spectrum", "--gamma-khz", "0:64:201"],
    "dynamics_pts": ["evolve", "--gamma-khz", "1", "--t-max-us", "50"],
    "dynamics_ptb": ["evolve", "--gamma-khz", "47", "--t-max-us", "50"],
    "dynamics_ptb_3level": ["evolve", "--gamma-khz", "47", "--t-max-us", "50", "--levels", "3", "--picture", "lossy"],
    "turning_point": ["turning-point"],
    "order_params": ["order-params"],
    "experiment": ["experiment", "--gamma-khz", "10"],
}


def run(outdir):
    outdir.mkdir(parents=True, exist_ok=True)
    for name, argv in RUNS.items():
        code = main(argv + ["--output", str(outdir / f"{name}.csv")])
        if code:
            return code
        print(f"wrote {outdir / name}.csv")
    return 0


if __name__ == "__main__":
    sys.exit(run(Path(sys.argv[1] if len(sys.argv) > 1 else "figures")))
