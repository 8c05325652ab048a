"""Small dense complex linear algebra, a fixed-step integrator and 1-D minimisers.

Everything here works on plain ``numpy`` arrays of dimension <= 4 (or short
state vectors) and is free of shared state.
"""
import math

import numpy as np

SERIES_TOL = 1e-16
_SCALE_TARGET = 0.5
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_CGOLD = 1.0 - _INVPHI


def _as_square(m):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def mat_exp(m, t=1.0):
    """Return ``exp(m * t)`` by scaling and squaring a truncated Taylor series.

    The series is summed until the norm of the next term drops below 1e-16 after
    scaling ``m * t`` to 1-norm <= 1/2.  At ``t == 0`` the identity is returned
    exactly.
    """
    m = _as_square(m)
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"t must be finite and >= 0, got {t}")
    n = m.shape[0]
    eye = np.eye(n, dtype=complex)
    if t == 0.0:
        return eye
    a = m * t
    norm = np.abs(a).sum(axis=0).max()
    squarings = 0
    if norm > _SCALE_TARGET:
        squarings = int(math.ceil(math.log2(norm / _SCALE_TARGET)))
        a = a / 2.0**squarings
    result = eye.copy()
    term = eye
    for k in range(1, 60):
        term = term @ a / k
        result += term
        if np.abs(term).sum(axis=0).max() < SERIES_TOL:
            break
    for _ in range(squarings):
        result = result @ result
    return result


def rk4_step(deriv, y, h):
    k1 = deriv(y)
    k2 = deriv(y + 0.5 * h * k1)
    k3 = deriv(y + 0.5 * h * k2)
    k4 = deriv(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_propagate(deriv, y0, t_end, dt):
    """Integrate the autonomous system ``y' = deriv(y)`` from 0 to ``t_end``.

    Classical 4th-order Runge-Kutta with fixed step ``dt``.  When ``dt`` does not
    divide ``t_end`` a single shorter final step lands exactly on ``t_end``; a
    ratio within 1e-9 of an integer is treated as exact division.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not t_end >= 0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    y = np.array(y0, dtype=complex)
    if t_end == 0:
        return y
    ratio = t_end / dt
    n = round(ratio)
    if n >= 1 and abs(ratio - n) < 1e-9 * max(1.0, ratio):
        h = t_end / n
        for _ in range(n):
            y = rk4_step(deriv, y, h)
        return y
    n = int(math.floor(ratio))
    for _ in range(n):
        y = rk4_step(deriv, y, dt)
    return rk4_step(deriv, y, t_end - n * dt)


def default_dt(omega, gamma):
    """Rabi period / 1000, clamped to 1/(10 gamma) for lossy runs."""
    dt = (2.0 * math.pi / omega) / 1000.0
    if gamma > 0:
        dt = min(dt, 1.0 / (10.0 * gamma))
    return dt


def trace_norm_diff(a, b):
    """Trace norm of ``a - b`` (sum of singular values, no factor 1/2)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.svd(a - b, compute_uv=False).sum())


def golden_section(f, a, b, rel_tol=1e-5, max_iter=500):
    """Minimise a unimodal ``f`` on ``[a, b]``.

    Stops once the bracket width is below ``rel_tol * max(|x|, tiny)``, where
    ``tiny`` is ``rel_tol`` times the initial width (so a minimum at 0 still
    terminates).  Returns ``(x, f(x), n_evals)``.
    """
    if not b > a:
        raise ValueError(f"empty bracket [{a}, {b}]")
    floor = rel_tol * (b - a)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while evals < max_iter:
        x = c if fc < fd else d
        if b - a <= rel_tol * max(abs(x), floor):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
        evals += 1
    if fc < fd:
        return c, fc, evals
    return d, fd, evals


def minimize_bracketed(f, a, b, rel_tol=1e-6, coarse_rel=1e-3, max_iter=500):
    """Golden-section narrowing of ``[a, b]`` followed by parabolic refinement.

    The golden phase runs until the bracket is ``coarse_rel`` wide (relative);
    successive parabolic interpolation through the best point and the bracket
    ends then converges to ``rel_tol``.  Parabolic steps that leave the bracket
    fall back to a golden step.  Returns ``(x, f(x), n_evals)``.
    """
    floor = rel_tol * (b - a)
    x, fx, evals = golden_section(f, a, b, rel_tol=coarse_rel, max_iter=max_iter)
    width = max(coarse_rel * max(abs(x), coarse_rel * (b - a)), 4 * floor)
    lo, hi = max(a, x - width), min(b, x + width)
    flo, fhi = f(lo), f(hi)
    evals += 2
    while evals < max_iter:
        tol = rel_tol * max(abs(x), floor)
        if hi - lo <= 2 * tol:
            break
        num = (x - lo) ** 2 * (fx - fhi) - (x - hi) ** 2 * (fx - flo)
        den = (x - lo) * (fx - fhi) - (x - hi) * (fx - flo)
        u = None
        if den != 0.0:
            u = x - 0.5 * num / den
            if not (lo + tol < u < hi - tol) or abs(u - x) < 0.5 * tol:
                u = None
        if u is None:
            u = x + _CGOLD * (hi - x) if hi - x > x - lo else x - _CGOLD * (x - lo)
        fu = f(u)
        evals += 1
        step = abs(u - x)
        if fu < fx:
            if u < x:
                hi, fhi = x, fx
            else:
                lo, flo = x, fx
            x, fx = u, fu
        else:
            if u < x:
                lo, flo = u, fu
            else:
                hi, fhi = u, fu
        if step <= tol:
            break
    return x, fx, evals
