"""Shot-noise emulation of the population readout and least-squares recovery of gamma.

Readout model: every shot is a binary "reads |0>" / "does not" discrimination,
so |1> and the sink |2> are indistinguishable (both counted against ``n_dark``,
which counts the |0> outcomes).  ``P0`` shots measure the population directly.
``SY`` shots first apply an ideal instantaneous analysis rotation that maps
``(|0> - i|1>)/sqrt(2)`` onto |0>; the |0> outcome probability is then
``(Tr2 + <sigma_y>)/2`` with ``Tr2 = rho00 + rho11``, so population lost to |2>
lowers it exactly as it lowers the subspace norm.

Sampling uses numpy's Philox 4x64-10 counter-based generator seeded with the
run seed; counts are ``Generator.binomial(n_shots, p)`` drawn in grid order.
"""
import csv
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import _guard_exponent, ground_state, propagate_lindblad, rho00_lossy_grid
from .errors import NonIdentifiableError
from .model import SystemParams
from .numerics import minimize_bracketed

PRNG_ID = "numpy-philox4x64-10"
GAMMA_BOUND_FACTOR = 10.0
FIT_REL_TOL = 1e-6
FIT_SCAN_POINTS = 2001
MIN_RECORDS = 5
CSV_COLUMNS = ("t_us", "n_shots", "n_dark", "p_hat", "std_err")


class Observable(enum.Enum):
    P0 = "P0"
    SY = "SY"


@dataclass(frozen=True)
class ShotRecord:
    """Counts at one time.  ``n_shots == 0`` marks a noiseless (exact) record."""

    t: float
    n_shots: int
    n_dark: int
    p_hat: float
    std_err: float

    def __post_init__(self):
        if self.n_shots < 0 or not 0 <= self.n_dark <= self.n_shots:
            raise ValueError(f"invalid counts n_dark={self.n_dark}, n_shots={self.n_shots}")
        if not 0.0 <= self.p_hat <= 1.0:
            raise ValueError(f"p_hat={self.p_hat} outside [0, 1]")

    @classmethod
    def from_counts(cls, t, n_shots, n_dark):
        p = n_dark / n_shots
        return cls(float(t), int(n_shots), int(n_dark), p, math.sqrt(p * (1 - p) / n_shots))

    @classmethod
    def exact(cls, t, prob):
        return cls(float(t), 0, 0, float(prob), 0.0)


@dataclass(frozen=True)
class FitResult:
    gamma_hat: float
    sse: float
    gamma_stderr: float
    n_iters: int


class PTPoint(NamedTuple):
    t: float
    rho00_pt: float
    std_err: float


def outcome_probabilities(p: SystemParams, t_grid, observable=Observable.P0):
    """Probability of the |0> outcome at each time, from the 3-level dynamics started in |0>."""
    observable = Observable(observable)
    obs = propagate_lindblad(p, ground_state(), t_grid).observables
    if observable is Observable.P0:
        prob = obs["rho00"]
    else:
        prob = 0.5 * obs["trace"] + obs["rho01"].imag
    return np.clip(prob, 0.0, 1.0)


def _check_shots(n_shots):
    if isinstance(n_shots, bool) or not isinstance(n_shots, (int, np.integer)) or n_shots < 1:
        raise ValueError(f"n_shots must be an integer >= 1, got {n_shots!r}")


def sample_records(t_grid, probs, n_shots, seed):
    _check_shots(n_shots)
    rng = np.random.Generator(np.random.Philox(seed))
    counts = rng.binomial(int(n_shots), np.asarray(probs, dtype=float))
    return [ShotRecord.from_counts(t, n_shots, k) for t, k in zip(t_grid, counts)]


def simulate_shots(p: SystemParams, t_grid, n_shots, seed, observable=Observable.P0):
    """Binomial shot counts of the |0> outcome; bit-reproducible for a given seed."""
    _check_shots(n_shots)
    t = np.asarray(t_grid, dtype=float)
    return sample_records(t, outcome_probabilities(p, t, observable), n_shots, seed)


def noiseless_records(p: SystemParams, t_grid, observable=Observable.P0):
    """Exact outcome probabilities as records (the ``n_shots = 0`` limit)."""
    t = np.asarray(t_grid, dtype=float)
    return [ShotRecord.exact(tk, pk) for tk, pk in zip(t, outcome_probabilities(p, t, observable))]


def _sse(t, y, omega):
    def f(gamma):
        r = y - rho00_lossy_grid(omega, gamma, t)
        return float(r @ r)

    return f


def _curvature(f, x, h, lo):
    if x - h >= lo:
        return (f(x + h) - 2 * f(x) + f(x - h)) / h**2
    return (f(x + 2 * h) - 2 * f(x + h) + f(x)) / h**2


def fit_gamma(records, omega) -> FitResult:
    """Least-squares loss rate from |0>-population records with ``omega`` known.

    The unweighted SSE against the closed-form population is scanned on
    [0, 10 omega] to locate the global basin, then refined by golden-section
    and parabolic steps to relative tolerance 1e-6.  ``gamma_stderr`` comes
    from the SSE curvature ``H = SSE''/2 = sum J_i^2`` (``J_i`` the model
    sensitivity): ``sqrt(sum J_i^2 e_i^2) / H`` with the binomial errors
    ``e_i`` of the records, or ``sqrt(s^2 / H)`` with ``s^2 = SSE/(n-1)`` for
    noiseless records.
    """
    if not omega > 0:
        raise ValueError("omega must be > 0")
    records = sorted(records, key=lambda r: r.t)
    if len(records) < MIN_RECORDS:
        raise ValueError(f"need at least {MIN_RECORDS} records, got {len(records)}")
    t = np.array([r.t for r in records])
    y = np.array([r.p_hat for r in records])
    if t[-1] - t[0] < math.pi / omega:
        raise ValueError("records must span at least half a Rabi period")
    if np.ptp(y) == 0:
        raise NonIdentifiableError("constant data carry no information about gamma")

    hi = GAMMA_BOUND_FACTOR * omega
    grid = np.linspace(0.0, hi, FIT_SCAN_POINTS)
    resid = y[None, :] - rho00_lossy_grid(omega, grid[:, None], t[None, :])
    i = int(np.argmin(np.einsum("ij,ij->i", resid, resid)))
    f = _sse(t, y, omega)
    lo_b, hi_b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    x, fx, evals = minimize_bracketed(f, lo_b, hi_b, rel_tol=FIT_REL_TOL)

    h = 1e-3 * max(x, 1e-2 * omega)
    half_curv = 0.5 * _curvature(f, x, h, 0.0)
    errs = np.array([r.std_err for r in records])
    if half_curv <= 0:
        stderr = math.inf
    elif np.any(errs > 0):
        lo = max(x - h, 0.0)
        jac = (rho00_lossy_grid(omega, x + h, t) - rho00_lossy_grid(omega, lo, t)) / (x + h - lo)
        stderr = math.sqrt(float(np.sum(jac**2 * errs**2))) / half_curv
    else:
        stderr = math.sqrt(fx / (len(records) - 1) / half_curv)
    return FitResult(gamma_hat=float(x), sse=float(fx), gamma_stderr=stderr, n_iters=evals)


def reconstruct_pt_series(records, fit: FitResult):
    """Multiply each population by ``exp(gamma_hat t)`` (errors scale the same way)."""
    out = []
    for r in records:
        _guard_exponent(fit.gamma_hat * r.t)
        factor = math.exp(fit.gamma_hat * r.t)
        out.append(PTPoint(r.t, factor * r.p_hat, factor * r.std_err))
    return out


def write_shot_csv(records, stream, meta):
    """Shot CSV with a ``#`` metadata line (``meta`` items plus the PRNG id)."""
    items = dict(meta)
    items.setdefault("prng", PRNG_ID)
    stream.write("# " + " ".join(f"{k}={v}" for k, v in items.items()) + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([f"{r.t * 1e6:.9g}", r.n_shots, r.n_dark, f"{r.p_hat:.9g}", f"{r.std_err:.9g}"])


def read_shot_csv(stream):
    """Inverse of ``write_shot_csv``; returns ``(records, meta)``."""
    meta = {}
    rows = []
    for line in stream:
        if line.startswith("#"):
            for item in line[1:].split():
                key, _, value = item.partition("=")
                meta[key] = value
        elif line.strip():
            rows.append(line)
    reader = csv.DictReader(rows)
    records = [
        ShotRecord(
            float(row["t_us"]) * 1e-6,
            int(row["n_shots"]),
            int(row["n_dark"]),
            float(row["p_hat"]),
            float(row["std_err"]),
        )
        for row in reader
    ]
    return records, meta
