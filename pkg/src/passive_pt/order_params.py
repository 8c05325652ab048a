"""Order parameters Sigma_Z / Sigma_Y across the PT transition and the population turning point."""
import enum
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Picture, closed_form_state, ground_state, propagate_expm, rho00_lossy, rho00_lossy_grid
from .model import EPS_EP, SystemParams, in_ep_band, pt_generator, unvec, vec
from .numerics import golden_section, mat_exp

# PTB evaluation time: exp(-kappa t_e) below this
STEADY_RESIDUAL = 1e-6
# omega * t_e for the EP-band evaluation; the normalised state approaches
# (|0> - i|1>)/sqrt(2) like 2/(omega t).  The closed form is exact at any t;
# the matrix exponential of the near-Jordan generator is only trusted to 1e3.
EP_OMEGA_T = 1e6
EP_OMEGA_T_EXPM = 1e3
EP_BAND_FACTOR = 10.0
PTB_MIN_TIME = 50e-6


class Which(enum.Enum):
    Z = "Z"
    Y = "Y"


class Method(enum.Enum):
    PERIOD_AVERAGE = "PERIOD_AVERAGE"
    STEADY_STATE = "STEADY_STATE"


@dataclass(frozen=True)
class OrderParamResult:
    gamma: float
    sigma_z_analytic: float
    sigma_y_analytic: float
    sigma_z_numeric: float
    sigma_y_numeric: float
    method: Method


def sigma_z_analytic(p: SystemParams):
    if p.gamma < p.omega:
        return 0.0
    return -math.sqrt(p.kappa_sq) / p.gamma


def sigma_y_analytic(p: SystemParams, with_flag=False):
    """Period/steady-state average of |<sigma_y>|/Tr.

    At ``gamma == 0`` the formula is 0/0; the limit 2/pi (time average of
    |sin|) is returned, and ``with_flag=True`` reports that as ``(value, True)``.
    """
    p.require_drive()
    if p.gamma == 0:
        value, is_limit = 2.0 / math.pi, True
    elif p.gamma < p.omega:
        # (omega/gamma)(1 - 2 acos(r)/pi) = (2/pi) asin(r)/r, free of cancellation as r -> 0
        r = p.gamma / p.omega
        ratio = 1 + r * r / 6 if r < 1e-4 else math.asin(r) / r
        value, is_limit = 2 * ratio / math.pi, False
    else:
        value, is_limit = p.omega / p.gamma, False
    return (value, is_limit) if with_flag else value


def _near_ep(p):
    return in_ep_band(p, EPS_EP * EP_BAND_FACTOR)


def _normalized_obs(state, which):
    tr = (state[0, 0] + state[1, 1]).real
    if which is Which.Z:
        return (state[1, 1].real - state[0, 0].real) / tr
    return 2.0 * state[0, 1].imag / tr


def steady_time(p: SystemParams):
    """Evaluation time of the PTB steady-state rule."""
    return max(PTB_MIN_TIME, math.log(1 / STEADY_RESIDUAL) / math.sqrt(p.kappa_sq))


def sigma_numeric(p: SystemParams, which, n_points=4096, rho0=None):
    """Order parameter from propagated states rather than the closed forms.

    PTS: mean of the normalised observable (absolute value for Y) over one
    period ``2 pi / sqrt(omega^2 - gamma^2)`` sampled at ``n_points`` equally
    spaced times.  PTB: the normalised observable once the dominant mode has
    taken over (``exp(-kappa t) < 1e-6``).  Near the EP: the normalised
    observable at ``omega t = 1e6`` from the closed-form state (start in
    ``|0>``), or at ``omega t = 1e3`` from the matrix exponential for any
    other start.
    Propagation uses the PT-picture generator, which leaves normalised
    quantities unchanged and avoids underflow.
    """
    which = Which(which)
    if n_points < 64:
        raise ValueError(f"n_points must be >= 64, got {n_points}")
    p.require_drive()
    if _near_ep(p):
        if rho0 is None:
            state = closed_form_state(p, EP_OMEGA_T / p.omega, Picture.PT).data
        else:
            state = propagate_expm(p, rho0, [EP_OMEGA_T_EXPM / p.omega], Picture.PT).states[0]
        return _normalized_obs(state, which)
    rho0 = rho0 or ground_state()
    if p.gamma > p.omega:
        state = propagate_expm(p, rho0, [steady_time(p)], Picture.PT).states[0]
        return _normalized_obs(state, which)
    return _period_average(p, which, n_points, rho0)


def _period_average(p, which, n_points, rho0):
    period = 2 * math.pi / math.sqrt(-p.kappa_sq)
    step = mat_exp(pt_generator(p), period / n_points)
    v = vec(rho0.data)
    total = 0.0
    for _ in range(n_points):
        v = step @ v
        value = _normalized_obs(unvec(v), which)
        total += abs(value) if which is Which.Y else value
    return total / n_points


def order_param_sweep(omega, gammas, n_points=4096, rho0=None):
    results = []
    for gamma in gammas:
        p = SystemParams(omega, gamma)
        method = Method.PERIOD_AVERAGE if gamma < omega and not _near_ep(p) else Method.STEADY_STATE
        results.append(
            OrderParamResult(
                gamma=gamma,
                sigma_z_analytic=sigma_z_analytic(p),
                sigma_y_analytic=sigma_y_analytic(p),
                sigma_z_numeric=sigma_numeric(p, Which.Z, n_points, rho0),
                sigma_y_numeric=sigma_numeric(p, Which.Y, n_points, rho0),
                method=method,
            )
        )
    return results


def population_sweep(omega, gammas, t):
    """Lossy ground-state population at time ``t`` for each loss rate (start in |0>)."""
    if not t > 0:
        raise ValueError("t must be > 0")
    gammas = list(gammas)
    if not gammas:
        raise ValueError("gammas must be non-empty")
    return [(g, float(rho00_lossy(SystemParams(omega, g), t)[0])) for g in gammas]


def _scan_size(omega, t):
    # zeros of rho00(gamma) crowd towards the EP with spacing ~ 1/(omega t)^2
    k = omega * t / (2 * math.pi)
    return int(min(2_000_001, 4001 + 200 * k * k))


def find_gamma_min(omega, t, gamma_max_factor=3.0, rel_tol=1e-5):
    """Loss rate at the turning point of rho00(t; gamma) on (0, 3 omega].

    For long times rho00 touches zero at several loss rates below the EP (the
    ground amplitude crosses zero).  The turning point is the largest-gamma
    local minimum, after which the population rises monotonically towards the
    Zeno-localised regime.  A dense scan brackets it, then golden-section
    search refines to ``rel_tol``.
    """
    if not t > 0:
        raise ValueError("t must be > 0")
    hi = gamma_max_factor * omega
    grid = np.linspace(0.0, hi, _scan_size(omega, t))[1:]
    values = rho00_lossy_grid(omega, grid, t)
    interior = np.nonzero((values[1:-1] <= values[:-2]) & (values[1:-1] <= values[2:]))[0] + 1
    if interior.size == 0:
        i = int(np.argmin(values))
        return float(grid[i])
    i = int(interior[-1])
    f = lambda g: float(rho00_lossy_grid(omega, g, t)[0])  # noqa: E731
    x, _, _ = golden_section(f, grid[i - 1], grid[i + 1], rel_tol=rel_tol)
    return float(x)
