"""Complex 2x2 algebra, spectral phases and the conserved 1-form.

Matrices are plain ``numpy`` arrays of shape ``(..., 2, 2)`` with complex
dtype; the leading axes batch over sample points.  Throughout, ``k`` is the
spectral parameter and ``lam = k**2 - 1/2`` the quantity that all phases
depend on.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

# exp() overflows double precision just above this argument
_EXP_LIMIT = np.log(np.finfo(float).max)


def mat2(a11, a12, a21, a22) -> np.ndarray:
    """Assemble a (batched) 2x2 complex matrix from its four entries."""
    a11, a12, a21, a22 = np.broadcast_arrays(
        *(np.asarray(x, dtype=complex) for x in (a11, a12, a21, a22))
    )
    out = np.empty(a11.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a11
    out[..., 0, 1] = a12
    out[..., 1, 0] = a21
    out[..., 1, 1] = a22
    return out


def det2(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def trace2(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] + m[..., 1, 1]


def inv2(m: np.ndarray) -> np.ndarray:
    """Inverse of a 2x2 matrix via the adjugate."""
    d = det2(m)
    return mat2(m[..., 1, 1] / d, -m[..., 0, 1] / d, -m[..., 1, 0] / d, m[..., 0, 0] / d)


def lam_of(k):
    return np.asarray(k, dtype=complex) ** 2 - 0.5


def phase_phi(k):
    """phi(k) = i (k^2 - 1/2), the exponent rate of the z-problem."""
    return 1j * lam_of(k)


def phase_psi(k):
    """psi(k) = 2i (k^2 - 1/2)^2, the exponent rate of the t-problem."""
    return 2j * lam_of(k) ** 2


def phase_eta(k, z, t):
    """eta(k) = -(k^2 - 1/2) z + 2 (k^2 - 1/2)^2 t."""
    lam = lam_of(k)
    return -lam * z + 2.0 * lam**2 * t


class Region(enum.Enum):
    D1 = "D1"
    D2 = "D2"
    D3 = "D3"
    D4 = "D4"
    BOUNDARY = "Boundary"


def default_region_tol(k) -> float:
    return 1e-12 * max(1.0, abs(complex(k)) ** 2)


def region_of(k: complex, tol: float | None = None) -> Region:
    """Classify ``k`` by the signs of Re phi and Re psi.

    D1: (+,+), D2: (+,-), D3: (-,-), D4: (-,+).  Points within ``tol`` of
    either zero set are reported as ``Region.BOUNDARY``.
    """
    if tol is None:
        tol = default_region_tol(k)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    rp = float(np.real(phase_phi(k)))
    rs = float(np.real(phase_psi(k)))
    if abs(rp) <= tol or abs(rs) <= tol:
        return Region.BOUNDARY
    if rp > 0:
        return Region.D1 if rs > 0 else Region.D2
    return Region.D4 if rs > 0 else Region.D3


def sigma_conj(x, m: np.ndarray) -> np.ndarray:
    """Apply exp(x sigma-hat): returns exp(x s3) m exp(-x s3).

    Off-diagonal entries pick up exp(+-2x).  Raises ``OverflowError`` when
    |Re 2x| leaves the double-precision exponent range.
    """
    x = np.asarray(x, dtype=complex)
    if np.any(np.abs(2.0 * x.real) > _EXP_LIMIT):
        raise OverflowError("sigma_conj exponent exceeds double range")
    m = np.asarray(m, dtype=complex)
    e = np.exp(2.0 * x)
    out = m.copy()
    out[..., 0, 1] = m[..., 0, 1] * e
    out[..., 1, 0] = m[..., 1, 0] / e
    return out


class ThetaDensity(NamedTuple):
    theta1: np.ndarray | float
    theta2: np.ndarray | float


def theta_density(r, r_z) -> ThetaDensity:
    """Densities of the closed 1-form Theta = theta1 dz + theta2 dt.

    theta1 = |r|^2 / 4 and theta2 = |r|^4 / 8 + (i/4)(conj(r) r_z - r conj(r_z)).
    The bracket equals 2i Im(conj(r) r_z), so theta2 is assembled from the
    manifestly real form |r|^4/8 - Im(conj(r) r_z)/2.
    """
    r = np.asarray(r, dtype=complex)
    r_z = np.asarray(r_z, dtype=complex)
    m2 = (r * r.conj()).real
    theta1 = m2 / 4.0
    theta2 = m2**2 / 8.0 - 0.5 * (r.conj() * r_z).imag
    return ThetaDensity(theta1, theta2)
