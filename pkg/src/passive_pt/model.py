"""Generators of the passive PT-symmetric qubit and their closed-form spectra.

Conventions (used everywhere in the package):

* Internal basis order is ``(|0>, |1>)`` (and ``|2>`` for the three-level
  model); matrix index 0 is ``|0>``.
* Pauli operators use a reversed-order convention: ``SIGMA_Z = |1><1| - |0><0|``
  and ``SIGMA_Y = i|0><1| - i|1><0|``.  These are the standard Pauli matrices
  written in the reversed order ``(|1>, |0>)``.  With this choice
  ``H_eff = H_PT - i(gamma/2) I`` holds literally, the ground state has
  ``<sigma_z> = -1`` and the closed forms for ``<sigma_y>`` come out positive for
  early times when starting in ``|0>``.
* Vectorised density matrices use the order ``(rho11, rho10, rho01, rho00)``,
  i.e. row-major flattening of the matrix written in ``(|1>, |0>)`` order.
  ``build_liouvillian`` returns the 4x4 generator in that order.
* Rates are angular frequencies in rad/s, times in s.
"""
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

EPS_EP = 1e-6

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

# internal matrix index pairs in vectorisation order (rho11, rho10, rho01, rho00)
_VEC_INDEX = ((1, 1), (1, 0), (0, 1), (0, 0))


@dataclass(frozen=True)
class SystemParams:
    """Rabi rate ``omega`` and loss rate ``gamma`` of ``|1>``, both in rad/s."""

    omega: float
    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.omega) and math.isfinite(self.gamma)):
            raise ValueError("omega and gamma must be finite")
        if self.omega < 0 or self.gamma < 0:
            raise ValueError(f"rates must be non-negative (omega={self.omega}, gamma={self.gamma})")

    @classmethod
    def from_khz(cls, omega_khz, gamma_khz):
        return cls(2e3 * math.pi * omega_khz, 2e3 * math.pi * gamma_khz)

    @property
    def kappa_sq(self):
        return self.gamma**2 - self.omega**2

    @property
    def kappa(self):
        """sqrt(gamma^2 - omega^2): real >= 0 in PTB, +i|kappa| in PTS."""
        return complex(np.sqrt(complex(self.kappa_sq)))

    @property
    def ratio(self):
        return self.gamma / self.omega

    def require_drive(self):
        if self.omega <= 0:
            raise ValueError("operation needs omega > 0")


class PTPhase(enum.Enum):
    PTS = "PTS"
    EP = "EP"
    PTB = "PTB"


@dataclass(frozen=True)
class Phase:
    tag: PTPhase
    kappa_sq: float


def in_ep_band(p: SystemParams, eps=EPS_EP):
    """True when |kappa| <= eps * omega."""
    p.require_drive()
    return abs(p.kappa_sq) <= (eps * p.omega) ** 2


def classify_phase(p: SystemParams) -> Phase:
    p.require_drive()
    if in_ep_band(p):
        tag = PTPhase.EP
    elif p.kappa_sq < 0:
        tag = PTPhase.PTS
    else:
        tag = PTPhase.PTB
    return Phase(tag, p.kappa_sq)


def build_h_eff(p: SystemParams):
    """(omega/2) sigma_x - i gamma |1><1|."""
    return np.array([[0, p.omega / 2], [p.omega / 2, -1j * p.gamma]], dtype=complex)


def build_h_pt(p: SystemParams):
    """(omega/2) sigma_x - i (gamma/2) sigma_z, the balanced gain/loss Hamiltonian."""
    return 0.5 * p.omega * SIGMA_X - 0.5j * p.gamma * SIGMA_Z


@dataclass(frozen=True)
class HamiltonianSpectrum:
    e1: complex
    e2: complex
    v1: np.ndarray
    v2: np.ndarray
    at_ep: bool


def h_eigensystem(p: SystemParams) -> HamiltonianSpectrum:
    """Closed-form eigenpairs of ``H_eff``.

    ``E = (-i gamma +/- s)/2`` with ``s = sqrt(omega^2 - gamma^2)``; the
    eigenvectors are ``(omega, -i gamma +/- s)`` in internal order.  Inside the
    EP band the two vectors coincide and ``at_ep`` is set.
    """
    s = complex(np.sqrt(complex(p.omega**2 - p.gamma**2)))
    e1 = 0.5 * (-1j * p.gamma + s)
    e2 = 0.5 * (-1j * p.gamma - s)
    v1 = np.array([p.omega, -1j * p.gamma + s], dtype=complex)
    v2 = np.array([p.omega, -1j * p.gamma - s], dtype=complex)
    at_ep = p.omega > 0 and in_ep_band(p)
    return HamiltonianSpectrum(e1, e2, v1, v2, at_ep)


def h_pt_eigenvalues(p: SystemParams):
    """Eigenvalues +/- sqrt(omega^2 - gamma^2)/2 of ``H_PT``; exactly 0 in the EP band."""
    if p.omega > 0 and in_ep_band(p):
        return 0j, 0j
    s = complex(np.sqrt(complex(p.omega**2 - p.gamma**2)))
    return 0.5 * s, -0.5 * s


def vec(rho):
    rho = np.asarray(rho)
    return np.array([rho[i, j] for i, j in _VEC_INDEX], dtype=complex)


def unvec(v):
    rho = np.empty((2, 2), dtype=complex)
    for k, (i, j) in enumerate(_VEC_INDEX):
        rho[i, j] = v[k]
    return rho


def build_liouvillian(p: SystemParams):
    """No-jump Liouvillian as a 4x4 matrix on ``vec(rho)``.

    Equivalent to ``rho' = -i (H_eff rho - rho H_eff^dagger)``: the population of
    ``|1>`` decays at ``2 gamma`` and coherences at ``gamma``.
    """
    g, h = p.gamma, 0.5 * p.omega
    return np.array(
        [
            [-2 * g, 1j * h, -1j * h, 0],
            [1j * h, -g, 0, -1j * h],
            [-1j * h, 0, -g, 1j * h],
            [0, -1j * h, 1j * h, 0],
        ],
        dtype=complex,
    )


def pt_generator(p: SystemParams):
    """Generator of the gain/loss-balanced picture, ``L + gamma I``."""
    return build_liouvillian(p) + p.gamma * np.eye(4)


def apply_liouvillian(p: SystemParams, rho):
    h = build_h_eff(p)
    rho = np.asarray(rho, dtype=complex)
    return -1j * (h @ rho - rho @ h.conj().T)


def three_level_rhs(p: SystemParams):
    """Right-hand side of the 3-level Lindblad equation on a flattened 3x3 rho.

    Jump operator ``sqrt(2 gamma) |2><1|`` in standard form, which reproduces
    the two-level equations for the (|0>, |1>) block.
    """
    h = np.zeros((3, 3), dtype=complex)
    h[0, 1] = h[1, 0] = 0.5 * p.omega
    rate = 2.0 * p.gamma

    def rhs(y):
        rho = y.reshape(3, 3)
        out = -1j * (h @ rho - rho @ h)
        out[2, 2] += rate * rho[1, 1]
        # anticommutator with J^dag J = 2 gamma |1><1|
        out[1, :] -= 0.5 * rate * rho[1, :]
        out[:, 1] -= 0.5 * rate * rho[:, 1]
        return out.reshape(-1)

    return rhs


def three_level_generator(p: SystemParams):
    """The 3-level Lindblad right-hand side as a 9x9 matrix on row-major ``rho``."""
    rhs = three_level_rhs(p)
    return np.stack([rhs(e) for e in np.eye(9, dtype=complex)], axis=1)


@dataclass(frozen=True)
class LiouvillianSpectrum:
    """Eigenvalues with right/left eigenmatrices (internal order, 2x2 each).

    ``lefts`` is ``None`` in the EP band where the eigenmatrices coalesce and
    no biorthogonal basis exists.
    """

    params: SystemParams
    lambdas: np.ndarray
    rights: np.ndarray
    lefts: Optional[np.ndarray]
    at_ep: bool

    @property
    def etas(self):
        """Eigenvalues shifted into the PT picture, ``lambda + gamma``."""
        return self.lambdas + self.params.gamma


def _right_mode(p, k):
    w, g = p.omega, p.gamma
    return np.array(
        [
            [1, -1j * (k - g) / w],
            [1j * (k - g) / w, -(2 * g * (k - g) + w**2) / w**2],
        ],
        dtype=complex,
    )


def liouvillian_spectrum(p: SystemParams) -> LiouvillianSpectrum:
    """Closed-form eigensystem of the no-jump Liouvillian.

    ``lambda = (-gamma + kappa, -gamma, -gamma, -gamma - kappa)``.  The left
    eigenmatrices are ``conj(R_i)`` scaled so that ``Tr[L_i^dag R_i] = 1``:
    the adjoint generator sends ``conj(R_i)`` to ``conj(lambda_i) conj(R_i)``,
    and the degenerate pair R2/R3 is already orthogonal under that pairing.
    """
    p.require_drive()
    k = p.kappa
    g, w = p.gamma, p.omega
    lambdas = np.array([-g + k, -g, -g, -g - k], dtype=complex)
    r2 = np.array([[1, 1j * g / w], [-1j * g / w, 1]], dtype=complex)
    rights = np.stack([_right_mode(p, k), r2, SIGMA_X.copy(), _right_mode(p, -k)])
    at_ep = in_ep_band(p)
    lefts = None
    if not at_ep:
        norms = np.einsum("ijk,ijk->i", rights, rights)
        lefts = rights.conj() / norms.conj()[:, None, None]
    return LiouvillianSpectrum(p, lambdas, rights, lefts, at_ep)


def r_ep():
    """Coalesced eigenmatrix at the EP, the state (|0> - i|1>)/sqrt(2)."""
    return 0.5 * np.array([[1, 1j], [-1j, 1]], dtype=complex)
