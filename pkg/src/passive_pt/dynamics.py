"""State propagation in the lossy and PT pictures, renormalisation and observables.

Independent routes produce the same density matrices:

* ``propagate_numeric``  RK4 on the master equation (2- or 3-level),
* ``propagate_spectral`` expansion in Liouvillian eigenmatrices,
* ``propagate_expm``     matrix exponential of the generator (safe at the EP),
* ``propagate_lindblad`` the same for the full 3-level Lindblad generator,
* ``closed_form_pt``     analytic solution for the initial state ``|0>``.
"""
import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateStateError, EPDegenerateError, PhaseError, PictureOverflowError
from .model import (
    PTPhase,
    SystemParams,
    build_liouvillian,
    classify_phase,
    liouvillian_spectrum,
    pt_generator,
    three_level_generator,
    three_level_rhs,
    unvec,
    vec,
)
from .numerics import default_dt, mat_exp, rk4_propagate, trace_norm_diff

MAX_PICTURE_EXPONENT = 700.0
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-9
TRACE_TOL = 1e-9
N_SAMPLES_DEFAULT = 512
EXPM_CHUNK = 4.0


class Picture(enum.Enum):
    LOSSY = "lossy"
    PT = "pt"


@dataclass
class DensityMatrix:
    data: np.ndarray
    picture: Picture = Picture.LOSSY

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape not in ((2, 2), (3, 3)):
            raise ValueError(f"density matrix must be 2x2 or 3x3, got {self.data.shape}")

    @property
    def dim(self):
        return self.data.shape[0]

    @property
    def trace(self):
        return float(np.trace(self.data).real)

    def block(self):
        """The (|0>, |1>) block."""
        return self.data[:2, :2]


def pure_state(amplitudes):
    """Projector onto a normalised ket given as 2 or 3 complex amplitudes."""
    psi = np.asarray(amplitudes, dtype=complex)
    norm = np.linalg.norm(psi)
    if psi.shape not in ((2,), (3,)) or norm == 0 or not np.isfinite(norm):
        raise ValueError(f"invalid state amplitudes {amplitudes!r}")
    psi = psi / norm
    return DensityMatrix(np.outer(psi, psi.conj()))


def ground_state():
    return pure_state([1, 0])


def excited_state():
    return pure_state([0, 1])


def embed_three_level(rho):
    data = np.zeros((3, 3), dtype=complex)
    data[:2, :2] = rho.data
    return DensityMatrix(data, rho.picture)


def check_state(rho: DensityMatrix):
    """Raise ValueError unless ``rho`` is Hermitian and PSD (and trace <= 1 if lossy)."""
    m = rho.data
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.conj().T).max() > HERMITIAN_TOL * scale:
        raise ValueError("density matrix is not Hermitian")
    evals = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    if evals.min() < -PSD_TOL * scale:
        raise ValueError("density matrix is not positive semidefinite")
    if rho.picture is Picture.LOSSY and rho.trace > 1 + TRACE_TOL:
        raise ValueError(f"lossy-picture trace {rho.trace} exceeds 1")


class Observables(NamedTuple):
    sigma_z_norm: float
    sigma_y_norm: float
    rho00: float
    rho11: float
    trace: float


def observables(rho) -> Observables:
    """Normalised <sigma_z>, <sigma_y> (package sign convention) on the (|0>, |1>) block."""
    m = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    rho00, rho11 = m[0, 0].real, m[1, 1].real
    tr = rho00 + rho11
    if abs(tr) <= 1e-300:
        raise DegenerateStateError("zero trace, observables undefined")
    return Observables(
        sigma_z_norm=(rho11 - rho00) / tr,
        sigma_y_norm=2.0 * m[0, 1].imag / tr,
        rho00=rho00,
        rho11=rho11,
        trace=tr,
    )


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    picture: Picture = Picture.LOSSY
    _obs: dict = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=complex)
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("one state per time required")

    @property
    def dim(self):
        return self.states.shape[1]

    def state(self, i):
        return DensityMatrix(self.states[i], self.picture)

    @property
    def observables(self):
        """Arrays keyed like ``Observables`` plus ``rho22`` (NaN for 2-level runs)."""
        if self._obs is None:
            s = self.states
            rho00, rho11 = s[:, 0, 0].real, s[:, 1, 1].real
            tr = rho00 + rho11
            with np.errstate(divide="ignore", invalid="ignore"):
                obs = {
                    "rho00": rho00,
                    "rho11": rho11,
                    "rho22": s[:, 2, 2].real if self.dim == 3 else np.full_like(rho00, np.nan),
                    "rho01": s[:, 0, 1],
                    "trace": tr,
                    "sigma_z_norm": (rho11 - rho00) / tr,
                    "sigma_y_norm": 2.0 * s[:, 0, 1].imag / tr,
                }
            self._obs = obs
        return self._obs

    def to_picture(self, gamma, picture):
        if picture is self.picture:
            return self
        sign = 1.0 if picture is Picture.PT else -1.0
        _guard_exponent(gamma * self.times[-1])
        factors = np.exp(sign * gamma * self.times)
        return Trajectory(self.times, self.states * factors[:, None, None], picture)


def _check_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("time grid must be a non-empty 1-D sequence")
    if t[0] < 0 or np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be non-negative and strictly increasing")
    return t


def default_grid(t_max, n_samples=N_SAMPLES_DEFAULT):
    return np.linspace(0.0, t_max, n_samples)


def propagate_numeric(p: SystemParams, rho0: DensityMatrix, t_grid, dt=None, levels=None) -> Trajectory:
    """RK4 integration of the master equation in the lossy picture.

    ``levels=2`` integrates the no-jump equation for the (|0>, |1>) block;
    ``levels=3`` integrates the full Lindblad equation with |2> as the sink (a
    2x2 ``rho0`` is embedded with zero population in |2>).  By default the level
    count follows ``rho0``.
    """
    check_state(rho0)
    if rho0.picture is not Picture.LOSSY:
        raise ValueError("propagate_numeric expects a lossy-picture initial state")
    levels = levels or rho0.dim
    if levels not in (2, 3) or (levels == 2 and rho0.dim == 3):
        raise ValueError(f"cannot run a {levels}-level propagation from a {rho0.dim}x{rho0.dim} state")
    t = _check_grid(t_grid)
    dt = default_dt(p.omega, p.gamma) if dt is None else dt
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")

    if levels == 2:
        gen = build_liouvillian(p)
        deriv = lambda y: gen @ y  # noqa: E731
        y = vec(rho0.data)
        unpack = unvec
    else:
        deriv = three_level_rhs(p)
        y = (rho0.data if rho0.dim == 3 else embed_three_level(rho0).data).reshape(-1)
        unpack = lambda v: v.reshape(3, 3)  # noqa: E731

    states = []
    t_prev = 0.0
    for tk in t:
        y = rk4_propagate(deriv, y, tk - t_prev, dt)
        t_prev = tk
        states.append(unpack(y))
    return Trajectory(t, np.array(states), Picture.LOSSY)


def propagate_spectral(spec, rho0: DensityMatrix, t, picture=Picture.LOSSY) -> DensityMatrix:
    """Expand ``rho0`` in right eigenmatrices and evolve each mode.

    ``rho(t) = sum_i exp(lambda_i t) c_i R_i`` with ``c_i = Tr[L_i^dag rho0]``.
    The PT picture uses ``exp((lambda_i + gamma) t)`` directly so no overflowing
    prefactor is formed.
    """
    if spec.at_ep:
        raise EPDegenerateError("Liouvillian eigenmatrices coalesce at the EP; use propagate_expm")
    if rho0.dim != 2:
        raise ValueError("spectral propagation is defined on the 2-level block")
    rates = spec.etas if picture is Picture.PT else spec.lambdas
    coeffs = np.einsum("ijk,jk->i", spec.lefts.conj(), rho0.data)
    weights = coeffs * np.exp(rates * t)
    return DensityMatrix(np.einsum("i,ijk->jk", weights, spec.rights), picture)


def spectral_trajectory(spec, rho0: DensityMatrix, t_grid, picture=Picture.LOSSY) -> Trajectory:
    t = _check_grid(t_grid)
    states = [propagate_spectral(spec, rho0, tk, picture).data for tk in t]
    return Trajectory(t, np.array(states), picture)


def _stepped_expm(gen, v, t):
    # ||gen * dt||_1 <= EXPM_CHUNK per matrix exponential; see propagate_expm
    gen_norm = float(np.abs(gen).sum(axis=0).max())
    out = []
    t_prev = 0.0
    for tk in t:
        delta = tk - t_prev
        if delta > 0:
            n = max(1, math.ceil(gen_norm * delta / EXPM_CHUNK))
            step = mat_exp(gen, delta / n)
            for _ in range(n):
                v = step @ v
        t_prev = tk
        out.append(v)
    return out


def propagate_expm(p: SystemParams, rho0: DensityMatrix, t_grid, picture=Picture.LOSSY) -> Trajectory:
    """Exact propagation ``exp(G t) vec(rho0)``; valid in every phase including the EP.

    Long intervals are split so each matrix exponential has ``||G dt||_1 <=
    EXPM_CHUNK``.  Squaring a near-Jordan generator over a long interval
    amplifies rounding like ``exp(||G t||)``; stepping keeps the error growth
    at the rate of the dynamics itself.  Very close to (but not at) the EP the
    propagator is still ill-conditioned for ``omega t`` beyond ~1e3.
    """
    if rho0.dim != 2:
        raise ValueError("matrix-exponential propagation is defined on the 2-level block")
    t = _check_grid(t_grid)
    gen = pt_generator(p) if picture is Picture.PT else build_liouvillian(p)
    states = [unvec(v) for v in _stepped_expm(gen, vec(rho0.data), t)]
    return Trajectory(t, np.array(states), picture)


def propagate_lindblad(p: SystemParams, rho0: DensityMatrix, t_grid) -> Trajectory:
    """Exact 3-level Lindblad evolution (lossy picture) via the 9x9 generator."""
    check_state(rho0)
    rho0 = rho0 if rho0.dim == 3 else embed_three_level(rho0)
    t = _check_grid(t_grid)
    vs = _stepped_expm(three_level_generator(p), rho0.data.reshape(-1), t)
    return Trajectory(t, np.array([v.reshape(3, 3) for v in vs]), Picture.LOSSY)


def _ch_shc(q):
    """cosh(x) and sinh(x)/x as real functions of q = x^2 (q < 0 gives cos, sin(y)/y).

    Returns ``(log_scale, ch, shc)`` with the true values equal to
    ``exp(log_scale) * (ch, shc)``; the scale is only non-zero for large
    positive q so that growing modes can be evaluated without overflow.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    log_scale = np.zeros_like(q)
    ch = np.empty_like(q)
    shc = np.empty_like(q)

    small = np.abs(q) < 1e-3
    qs = q[small]
    ch[small] = 1 + qs / 2 * (1 + qs / 12 * (1 + qs / 30))
    shc[small] = 1 + qs / 6 * (1 + qs / 20 * (1 + qs / 42))

    neg = (q < 0) & ~small
    y = np.sqrt(-q[neg])
    ch[neg] = np.cos(y)
    shc[neg] = np.sin(y) / y

    pos = (q > 0) & ~small
    x = np.sqrt(q[pos])
    e = np.exp(-2 * x)
    log_scale[pos] = x
    ch[pos] = 0.5 * (1 + e)
    shc[pos] = -np.expm1(-2 * x) / (2 * x)
    return log_scale, ch, shc


def ground_amplitudes(omega, gamma, t):
    """PT-picture ket from ``|0>``: ``exp(-i H_PT t)|0> = exp(s) * (a0, a1)``.

    Returns ``(s, a0, a1)`` (broadcast over array arguments) with ``a0`` real
    and ``a1`` purely imaginary.  Written as functions of ``kappa^2`` only, so
    the PTS (trigonometric), EP (polynomial) and PTB (hyperbolic) regimes are
    one expression.
    """
    t = np.asarray(t, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    half = 0.5 * t
    s, ch, shc = _ch_shc((gamma**2 - omega**2) * half**2)
    a0 = ch + gamma * half * shc
    a1 = -1j * omega * half * shc
    return s, a0, a1


def ground_start_amplitudes(p: SystemParams, t):
    return ground_amplitudes(p.omega, p.gamma, t)


def rho00_lossy_grid(omega, gamma, t):
    """Lossy ground-state population from ``|0>``, broadcast over ``gamma`` and ``t``."""
    s, a0, _ = ground_amplitudes(omega, gamma, t)
    return np.exp(2 * s - np.asarray(gamma) * np.asarray(t, dtype=float)) * a0**2


def rho00_lossy(p: SystemParams, t):
    """Ground-state population of the lossy qubit started in ``|0>`` (vectorised in t)."""
    return rho00_lossy_grid(p.omega, p.gamma, t)


def rho00_pt(p: SystemParams, t):
    s, a0, _ = ground_start_amplitudes(p, t)
    _guard_exponent(float(np.max(2 * s)))
    return np.exp(2 * s) * a0**2


def closed_form_pt(p: SystemParams, t) -> DensityMatrix:
    """Analytic PT-picture density matrix at time ``t`` for the initial state ``|0>``."""
    return closed_form_state(p, t, Picture.PT)


def closed_form_state(p: SystemParams, t, picture=Picture.PT) -> DensityMatrix:
    s, a0, a1 = (x.item() for x in ground_start_amplitudes(p, float(t)))
    exponent = 2 * s - (p.gamma * t if picture is Picture.LOSSY else 0.0)
    _guard_exponent(exponent)
    psi = np.array([a0, a1], dtype=complex)
    return DensityMatrix(math.exp(exponent) * np.outer(psi, psi.conj()), picture)


def closed_form_trajectory(p: SystemParams, t_grid, picture=Picture.PT) -> Trajectory:
    t = _check_grid(t_grid)
    states = [closed_form_state(p, tk, picture).data for tk in t]
    return Trajectory(t, np.array(states), picture)


def _guard_exponent(x):
    if x > MAX_PICTURE_EXPONENT:
        raise PictureOverflowError(f"picture factor exp({x:.1f}) would overflow")


def to_pt_picture(rho: DensityMatrix, gamma, t) -> DensityMatrix:
    if rho.picture is not Picture.LOSSY:
        raise ValueError("expected a lossy-picture state")
    _guard_exponent(gamma * t)
    return DensityMatrix(math.exp(gamma * t) * rho.data, Picture.PT)


def to_lossy_picture(rho: DensityMatrix, gamma, t) -> DensityMatrix:
    if rho.picture is not Picture.PT:
        raise ValueError("expected a PT-picture state")
    return DensityMatrix(math.exp(-gamma * t) * rho.data, Picture.LOSSY)


def normalize(rho):
    """Divide by the trace.  Accepts a DensityMatrix (picture kept) or a bare array."""
    m = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    tr = np.trace(m)
    if abs(tr) <= 1e-300:
        raise DegenerateStateError("cannot normalise a state with zero trace")
    out = m / tr
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out, rho.picture)
    return out


def _scale_free(states):
    """Remove the overall scalar from each state.

    States are divided by their trace, except for trajectories that start
    traceless (e.g. the sigma_x eigenmode), which are divided by their trace
    norm instead.
    """
    first = states[0]
    if abs(np.trace(first)) > 1e-12 * np.linalg.svd(first, compute_uv=False).sum():
        return states / np.trace(states, axis1=1, axis2=2)[:, None, None]
    norms = np.linalg.svd(states, compute_uv=False).sum(axis=1)
    return states / norms[:, None, None]


def steady_state(p: SystemParams):
    """Normalised dominant eigenmode R1 (PTB only)."""
    if classify_phase(p).tag is not PTPhase.PTB:
        raise PhaseError("the R1 steady state only attracts in the PT-broken phase")
    return normalize(liouvillian_spectrum(p).rights[0])


def trace_distance_to_steady(p: SystemParams, traj: Trajectory):
    """Trace-norm distance of each renormalised state from normalised R1."""
    target = steady_state(p)
    states = _scale_free(traj.states[:, :2, :2])
    return np.array([trace_norm_diff(s, target) for s in states])
