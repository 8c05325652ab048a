import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import KAPPA_47_32_KHZ
from passive_pt.model import (
    EPS_EP,
    IDENTITY,
    SIGMA_Y,
    SIGMA_Z,
    PTPhase,
    SystemParams,
    apply_liouvillian,
    build_h_eff,
    build_h_pt,
    build_liouvillian,
    classify_phase,
    h_eigensystem,
    h_pt_eigenvalues,
    liouvillian_spectrum,
    r_ep,
    three_level_generator,
    unvec,
    vec,
)

KHZ = 2e3 * math.pi
ratios = st.floats(0.0, 3.0).filter(lambda r: abs(r - 1) > 1e-3)
params = st.builds(lambda w, r: SystemParams(w * KHZ, r * w * KHZ), st.floats(1.0, 100.0), ratios)


def test_params_validation():
    with pytest.raises(ValueError):
        SystemParams(1.0, -1.0)
    with pytest.raises(ValueError):
        SystemParams(math.nan, 1.0)
    with pytest.raises(ValueError):
        SystemParams(0.0, 1.0).require_drive()


def test_from_khz_converts_to_angular():
    p = SystemParams.from_khz(32, 1)
    assert p.omega == pytest.approx(2 * math.pi * 32e3)
    assert p.gamma == pytest.approx(2 * math.pi * 1e3)


def test_h_eff_examples():
    assert np.array_equal(build_h_eff(SystemParams(2, 0)), np.array([[0, 1], [1, 0]]))
    assert np.array_equal(build_h_eff(SystemParams(0, 2)), np.array([[0, 0], [0, -2j]]))


def test_h_eff_degenerate_at_ep():
    p = SystemParams.from_khz(32, 32)
    ev = np.linalg.eigvals(build_h_eff(p))
    assert np.allclose(ev, -0.5j * p.gamma, atol=1e-6 * p.omega)


@given(params)
def test_h_eff_is_h_pt_shifted(p):
    assert np.allclose(build_h_eff(p), build_h_pt(p) - 0.5j * p.gamma * IDENTITY, rtol=0, atol=1e-9)


def test_ground_state_has_sigma_z_minus_one():
    ket0 = np.diag([1.0, 0.0])
    assert np.trace(SIGMA_Z @ ket0).real == -1
    rho = np.array([[0.5, 0.3 + 0.2j], [0.3 - 0.2j, 0.5]])
    assert np.trace(SIGMA_Y @ rho).real == pytest.approx(2 * rho[0, 1].imag)


def test_h_pt_eigenvalue_examples():
    w = 32 * KHZ
    e = h_pt_eigenvalues(SystemParams(w, 0))
    assert np.allclose(sorted(x.real for x in e), [-w / 2, w / 2])
    e = h_pt_eigenvalues(SystemParams(w, 16 * KHZ))
    s = 0.5 * math.sqrt(w**2 - (16 * KHZ) ** 2)
    assert all(abs(x.imag) == 0 for x in e)
    assert np.allclose(sorted(x.real for x in e), [-s, s])
    e = h_pt_eigenvalues(SystemParams(w, 47 * KHZ))
    assert all(x.real == 0 for x in e)
    assert np.allclose(sorted(x.imag for x in e), [-0.5 * KAPPA_47_32_KHZ * KHZ, 0.5 * KAPPA_47_32_KHZ * KHZ])


def test_h_eigensystem_examples():
    h = h_eigensystem(SystemParams(2, 0))
    assert {h.e1, h.e2} == {1, -1}
    p = SystemParams.from_khz(32, 32)
    h = h_eigensystem(p)
    assert h.at_ep
    assert h.e1 == pytest.approx(-0.5j * p.gamma) and h.e2 == pytest.approx(-0.5j * p.gamma)
    for v in (h.v1, h.v2):
        assert np.allclose(v / v[0], [1, -1j])
    p = SystemParams.from_khz(32, 47)
    h = h_eigensystem(p)
    k = KAPPA_47_32_KHZ * KHZ
    assert sorted([h.e1.imag, h.e2.imag]) == pytest.approx(sorted([-(p.gamma - k) / 2, -(p.gamma + k) / 2]))


@given(params)
def test_h_eigensystem_invariants(p):
    h = h_eigensystem(p)
    m = build_h_eff(p)
    scale = p.omega + p.gamma
    assert abs(h.e1 + h.e2 - (-1j * p.gamma)) <= 1e-12 * scale
    assert abs(h.e1 * h.e2 - np.linalg.det(m)) <= 1e-12 * scale**2
    for e, v in ((h.e1, h.v1), (h.e2, h.v2)):
        assert np.abs(m @ v - e * v).max() <= 1e-9 * scale * np.abs(v).max()


def test_liouvillian_matches_commutator_form(rng):
    for _ in range(100):
        p = SystemParams(rng.uniform(0.1, 5), rng.uniform(0, 5))
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        rho = a @ a.conj().T
        lhs = unvec(build_liouvillian(p) @ vec(rho))
        assert np.allclose(lhs, apply_liouvillian(p, rho), atol=1e-12)
        # component equations for populations and the coherence
        w, g = p.omega, p.gamma
        assert lhs[1, 1] == pytest.approx(-2 * g * rho[1, 1] + 0.5j * w * (rho[1, 0] - rho[0, 1]))
        assert lhs[0, 0] == pytest.approx(-0.5j * w * (rho[1, 0] - rho[0, 1]))
        assert lhs[0, 1] == pytest.approx(-g * rho[0, 1] - 0.5j * w * (rho[1, 1] - rho[0, 0]))


def test_liouvillian_unitary_limit_spectrum():
    p = SystemParams(2.0, 0.0)
    ev = np.sort_complex(np.linalg.eigvals(build_liouvillian(p)))
    assert np.allclose(ev.real, 0, atol=1e-12)
    assert np.allclose(sorted(ev.imag), [-2, 0, 0, 2], atol=1e-12)


def test_liouvillian_pts_eigenvalues():
    p = SystemParams.from_khz(32, 1)
    spec = liouvillian_spectrum(p)
    g, k = p.gamma, p.kappa
    assert k.real == 0 and k.imag > 0
    assert np.allclose(spec.lambdas, [-g + k, -g, -g, -g - k])


def _check_spectrum(p):
    spec = liouvillian_spectrum(p)
    gen = build_liouvillian(p)
    scale = p.omega + p.gamma
    for lam, r in zip(spec.lambdas, spec.rights):
        assert np.abs(gen @ vec(r) - lam * vec(r)).max() <= 1e-10 * scale * np.abs(r).max()
    gram = np.einsum("ijk,ljk->il", spec.lefts.conj(), spec.rights)
    assert np.allclose(gram, np.eye(4), atol=1e-10)
    recon = sum(lam * np.outer(vec(r), vec(l).conj()) for lam, r, l in zip(spec.lambdas, spec.rights, spec.lefts))
    assert np.abs(recon - gen).max() <= 1e-9 * scale
    re = spec.lambdas.real
    assert np.all(re[:-1] >= re[1:] - 1e-12 * scale)


@given(params)
def test_liouvillian_spectrum_invariants(p):
    _check_spectrum(p)


@given(params)
def test_lefts_are_adjoint_eigenmatrices(p):
    spec = liouvillian_spectrum(p)
    adj = build_liouvillian(p).conj().T
    for lam, l in zip(spec.lambdas, spec.lefts):
        assert np.allclose(adj @ vec(l), lam.conjugate() * vec(l), atol=1e-9 * (p.omega + p.gamma) * np.abs(l).max())


@given(params)
def test_liouvillian_eigenvalues_from_h_eff(p):
    h = h_eigensystem(p)
    pairs = [-1j * (ej - ek.conjugate()) for ej, ek in itertools.product((h.e1, h.e2), repeat=2)]
    lam = liouvillian_spectrum(p).lambdas
    scale = p.omega + p.gamma
    assert np.allclose(np.sort_complex(np.array(pairs)), np.sort_complex(lam), atol=1e-10 * scale)


def test_unitary_limit_coherence_mode_is_traceless():
    spec = liouvillian_spectrum(SystemParams(3.0, 0.0))
    assert spec.lambdas[0] == pytest.approx(3j)
    assert abs(np.trace(spec.rights[0])) < 1e-15


def test_ep_flags_and_coalesced_mode():
    p = SystemParams.from_khz(32, 32)
    spec = liouvillian_spectrum(p)
    assert spec.at_ep and spec.lefts is None
    assert np.allclose(spec.rights[0], spec.rights[3])
    r = spec.rights[0] / np.trace(spec.rights[0])
    assert np.allclose(r, r_ep())
    assert np.allclose(r_ep(), 0.5 * np.array([[1, 1j], [-1j, 1]]))
    gen = build_liouvillian(p)
    assert np.allclose(gen @ vec(r_ep()), -p.gamma * vec(r_ep()), atol=1e-9)


def test_classify_phase_examples():
    assert classify_phase(SystemParams.from_khz(32, 1)).tag is PTPhase.PTS
    assert classify_phase(SystemParams.from_khz(32, 47)).tag is PTPhase.PTB
    assert classify_phase(SystemParams.from_khz(32, 32)).tag is PTPhase.EP
    w = 1.0
    assert classify_phase(SystemParams(w, w * (1 + 0.4 * EPS_EP**2))).tag is PTPhase.EP
    assert classify_phase(SystemParams(w, w * (1 + EPS_EP))).tag is PTPhase.PTB


@given(st.lists(st.floats(0, 3), min_size=2, max_size=30))
def test_classify_phase_monotone_in_gamma(ratios):
    order = {PTPhase.PTS: 0, PTPhase.EP: 1, PTPhase.PTB: 2}
    tags = [order[classify_phase(SystemParams(1.0, r)).tag] for r in sorted(ratios)]
    assert tags == sorted(tags)


def test_three_level_generator_block_matches_two_level(rng):
    p = SystemParams(1.3, 0.7)
    g9 = three_level_generator(p)
    for _ in range(10):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        rho = np.zeros((3, 3), dtype=complex)
        rho[:2, :2] = a @ a.conj().T
        out = (g9 @ rho.reshape(-1)).reshape(3, 3)
        assert np.allclose(out[:2, :2], apply_liouvillian(p, rho[:2, :2]))
        assert np.trace(out) == pytest.approx(0, abs=1e-12)
