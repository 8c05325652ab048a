"""Monte Carlo calibration of the loss-rate fit under binomial shot noise.

For each loss rate, fits ``--seeds`` independent 800-shot data sets and
reports the 5% success rate, the bias in units of the spread, and how the
reported standard error compares with the observed spread.
"""
import argparse
import math

import numpy as np

from passive_pt.measurement import fit_gamma, outcome_probabilities, sample_records
from passive_pt.model import SystemParams


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--omega-khz", type=float, default=32.0)
    parser.add_argument("--gamma-khz", type=float, nargs="+", default=[5.0, 10.0, 40.0])
    parser.add_argument("--seeds", type=int, default=200)
    parser.add_argument("--n-shots", type=int, default=800)
    parser.add_argument("--points", type=int, default=20)
    parser.add_argument("--t-max-us", type=float, default=100.0)
    args = parser.parse_args()

    t = np.linspace(0, args.t_max_us * 1e-6, args.points)
    print("gamma_khz,within_5pct,bias_over_sd,sd_rel,median_stderr_over_sd")
    for g in args.gamma_khz:
        p = SystemParams.from_khz(args.omega_khz, g)
        probs = outcome_probabilities(p, t)
        fits = [fit_gamma(sample_records(t, probs, args.n_shots, s), p.omega) for s in range(args.seeds)]
        est = np.array([f.gamma_hat for f in fits])
        sd = est.std(ddof=1)
        within = np.mean(np.abs(est / p.gamma - 1) < 0.05)
        stderr = np.median([f.gamma_stderr for f in fits])
        print(f"{g:g},{within:.3f},{(est.mean() - p.gamma) / sd:.3f},{sd / p.gamma:.4f},{stderr / sd:.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
