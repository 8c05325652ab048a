"""Render a CSV written by the CLI; the first column is the x axis.

    python3 scripts/plot_csv.py figures/order_params.csv [columns ...] [--out plot.png]

Needs matplotlib, which the package itself does not depend on.
"""
import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read(path):
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    return {k: [float(r[k]) if r[k] else float("nan") for r in rows] for k in rows[0]}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv")
    parser.add_argument("columns", nargs="*")
    parser.add_argument("--out", default=None)
    args = parser.parse_args()
    data = read(args.csv)
    xname = next(iter(data))
    columns = args.columns or [k for k in data if k != xname]
    fig, ax = plt.subplots(figsize=(6, 4))
    for col in columns:
        ax.plot(data[xname], data[col], label=col)
    ax.set_xlabel(xname)
    ax.legend(fontsize="small")
    fig.tight_layout()
    out = args.out or args.csv.rsplit(".", 1)[0] + ".png"
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
