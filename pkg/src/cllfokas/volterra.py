"""Eigenfunctions of the gauge-transformed Lax pair and their large-k expansion.

The three eigenfunctions solve

    H_z = i lam [sigma3, H] + A1 H,        H_t = -2i lam^2 [sigma3, H] + B1 H,

with ``lam = k**2 - 1/2``, normalised to the identity at different base
points:

* ``H1`` at ``(0, 0)``, reached along ``(0,0) -> (0,t) -> (z,t)``;
* ``H2`` at ``(0, T)``, reached along ``(0,T) -> (0,t) -> (z,t)``;
* ``H3`` at ``(Z, t)``, reached along ``(Z,t) -> (z,t)``.

Columns are integrated separately since each one is bounded on a different
part of the k-plane.  Column ``j`` of ``H`` obeys an ODE whose diagonal part
``i lam (sigma3 - s_j)`` (``s_1 = +1``, ``s_2 = -1``) is handled exactly by
the exponential integrator; no large exponential ever enters the state.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .core import IDENTITY, det2, lam_of, mat2
from .errors import IllConditionedFit, OutOfDomain
from .integrators import check_growth, etdrk4, etdrk4_ratio, graded_nodes
from .potential import PotentialField

WHICH = ("H1", "H2", "H3")
_SIGNS = (1.0, -1.0)
_S3 = np.array([1.0, -1.0])

#: magnitudes of the default asymptotic ladder
LADDER_MAGNITUDES = (8.0, 12.0, 18.0, 27.0, 40.0)
#: target value of |step * N| for linear t-legs, where N carries k^3 terms
T_STEP_SCALE = 0.5
#: below this |k| the t-legs integrate the column directly, above it the
#: ratio form is used (see integrators.etdrk4_ratio)
RATIO_K_MIN = 4.0
#: step of the ratio-form t-legs as a fraction of T, for max |k| = RATIO_K_REF;
#: the step shrinks in proportion to 1/max|k| beyond that
RATIO_T_STEP = 1.25e-4
RATIO_K_REF = 40.0
# H1/H2 columns leave the t-leg far from unit vectors and lose accuracy on
# the z-leg faster than H3 columns do; their z-step is capped at this value
Z_STEP_MAX_T_BASED = 1.0 / 128
Z_STEP_MAX_H3 = 1.0 / 32


def build_A1(r, k, theta, form: str = "compatible") -> np.ndarray:
    """The z-part of the transformed Lax pair at given field values.

    ``form="compatible"`` (default) returns

        [[-(i/2)|r|^2,              k r e^{-2i theta}],
         [-k conj(r) e^{2i theta},   (i/2)|r|^2      ]]

    which, together with :func:`build_B1`, satisfies the zero-curvature
    condition exactly.  ``form="printed"`` returns the variant with
    diagonal -(3i/4)|r|^2 and phases e^{+-2i theta} swapped; it is kept for
    comparison and is not compatible with the t-part.
    """
    r = np.asarray(r, dtype=complex)
    k = np.asarray(k, dtype=complex)
    theta = np.asarray(theta, dtype=float)
    m2 = (r * r.conj()).real
    if form == "compatible":
        e = np.exp(-2j * theta)
        return mat2(-0.5j * m2, k * r * e, -k * r.conj() / e, 0.5j * m2)
    if form == "printed":
        e = np.exp(2j * theta)
        return mat2(-0.75j * m2, k * r * e, -k * r.conj() / e, 0.75j * m2)
    raise ValueError(f"unknown form {form!r}")


def build_B1(r, rz, k, theta, form: str = "compatible") -> np.ndarray:
    """The t-part of the transformed Lax pair; traceless by construction."""
    r = np.asarray(r, dtype=complex)
    rz = np.asarray(rz, dtype=complex)
    k = np.asarray(k, dtype=complex)
    theta = np.asarray(theta, dtype=float)
    m2 = (r * r.conj()).real
    if form == "compatible":
        e = np.exp(-2j * theta)
        d = 1j * (m2 * k**2 - m2**2 / 4 + (r.conj() * rz).imag)
        b12 = (-2 * k**3 * r + k * (r + 1j * rz + 0.5 * m2 * r)) * e
        b21 = (2 * k**3 * r.conj() + k * (-r.conj() + 1j * rz.conj() - 0.5 * m2 * r.conj())) / e
        return mat2(d, b12, b21, -d)
    if form == "printed":
        e = np.exp(2j * theta)
        d = -0.25j * m2**2 + 1.25 * (r.conj() * rz - rz.conj() * r)
        b12 = (-2 * k**3 * r + 1j * k**2 * m2 + k * (rz + r - m2 * r)) * e
        b21 = (2 * k**3 * r.conj() - 1j * k**2 * m2 + k * (rz.conj() - r.conj() + m2 * r.conj())) / e
        return mat2(d, b12, b21, -d)
    raise ValueError(f"unknown form {form!r}")


@dataclass(frozen=True)
class LaxMatrices:
    A1: np.ndarray
    B1: np.ndarray


def lax_matrices(field: PotentialField, z: float, t: float, k) -> LaxMatrices:
    r, rz, th = field.sample(z, t)
    return LaxMatrices(build_A1(r, k, th), build_B1(r, rz, k, th))


@dataclass(frozen=True)
class EigenfunctionEval:
    """Value of one eigenfunction at a point; ``H`` may be batched over k."""

    H: np.ndarray
    which: str
    z: float
    t: float
    k: np.ndarray
    step: float
    order: int = 4
    tail: float = 0.0

    @property
    def det_err(self) -> np.ndarray:
        return np.abs(det2(self.H) - 1.0)


# ------------------------------------------------------------------ legs


def _z_rates(k, col: int) -> np.ndarray:
    lam = lam_of(k)[..., None]
    return 1j * lam * (_S3 - _SIGNS[col])


def _t_rates(k, col: int) -> np.ndarray:
    lam = lam_of(k)[..., None]
    return -2j * lam**2 * (_S3 - _SIGNS[col])


class _ZProfile:
    """Spline of r and theta along z at one time level."""

    def __init__(self, field: PotentialField, t: float):
        r, _, th = field.profile(t)
        self.sr = CubicSpline(field.z, r)
        self.sth = CubicSpline(field.z, th)
        self.rmax = float(np.max(np.abs(r)))

    def __call__(self, z):
        return self.sr(z), self.sth(z)


def _z_nodes(z0: float, z1: float, max_step: float):
    n = max(1, int(np.ceil(abs(z1 - z0) / max_step - 1e-12)))
    return np.linspace(z0, z1, 2 * n + 1), (z1 - z0) / n


def _t_step(field: PotentialField, k, scale: float) -> float:
    s0 = field.s0_fine
    s1 = field.s1_fine
    kk = np.max(np.abs(np.atleast_1d(k)))
    m = np.max(np.abs(s0), initial=0.0)
    bound = 2 * kk**3 * m + kk**2 * m**2 + kk * (m + np.max(np.abs(s1), initial=0.0) + m**3)
    base = 2.0 * field.grid.T / max(len(field.t_fine) - 1, 1)
    if bound == 0:
        return base
    return min(base, scale / bound)


def z_leg(field: PotentialField, t: float, z0: float, z1: float, k, col: int, y0, step=None, keep=False):
    """Integrate column ``col`` along z from ``z0`` to ``z1`` at time ``t``.

    ``k`` has shape ``(m,)``; ``y0`` has shape ``(m, 2)``.
    """
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    h = 2.0 * field.grid.dz if step is None else step
    nodes, hs = _z_nodes(z0, z1, h)
    prof = _ZProfile(field, t)
    r, th = prof(nodes)
    L = _z_rates(k, col)
    check_growth(L, z1 - z0)
    coeff = build_A1(r[:, None], k[None, :], th[:, None])
    out = etdrk4(L, coeff, y0, hs, keep=keep)
    if keep:
        return out[0], nodes[::2], out[1]
    return out


def t_leg(
    field: PotentialField,
    t0: float,
    t1: float,
    k,
    col: int,
    y0,
    step=None,
    keep=False,
    scale=T_STEP_SCALE,
    method: str = "auto",
):
    """Integrate column ``col`` along z=0 from ``t0`` to ``t1``.

    ``t0`` must be the base point, i.e. ``y0`` the unit column.  The mesh is
    graded near ``t0`` to resolve the initial layer of width ~1/|k|^4.  For
    large |k| (``method="ratio"``, or ``"auto"`` with min |k| >= RATIO_K_MIN)
    the column is advanced through its ratio form, whose step does not have
    to shrink like |k|^-3.
    """
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    L = _t_rates(k, col)
    check_growth(L, t1 - t0)
    if method == "auto":
        method = "ratio" if np.min(np.abs(k)) >= RATIO_K_MIN else "linear"
    if step is not None:
        h = step
    elif method == "ratio":
        kfac = min(1.0, RATIO_K_REF / float(np.max(np.abs(k))))
        h = min(RATIO_T_STEP * kfac * field.grid.T, 2.0 * field.grid.T / max(len(field.t_fine) - 1, 1))
    else:
        h = _t_step(field, k, scale)
    lmax = float(np.max(np.abs(L)))
    nodes, hs = graded_nodes(t0, t1, h, 0.05 / lmax if lmax > 0 else h)
    s0, s1, th = field.boundary(nodes)
    coeff = build_B1(s0[:, None], s1[:, None], k[None, :], th[:, None])
    if method == "ratio":
        out = etdrk4_ratio(L[:, 1 - col], coeff, col, hs, keep=keep)
    elif method == "linear":
        out = etdrk4(L, coeff, y0, hs, keep=keep)
    else:
        raise ValueError(f"unknown method {method!r}")
    if keep:
        return out[0], nodes[::2], out[1]
    return out


def _unit(m: int, col: int) -> np.ndarray:
    y = np.zeros((m, 2), dtype=complex)
    y[:, col] = 1.0
    return y


def solve_H(
    which: str,
    field: PotentialField,
    z: float,
    t: float,
    k,
    columns: Sequence[int] = (0, 1),
    z_step=None,
    t_step=None,
) -> EigenfunctionEval:
    """Evaluate H1, H2 or H3 at ``(z, t)`` for one or several k.

    Only the requested columns are integrated; the others are returned as
    NaN.  A column requested at a k where it grows along its path raises
    :class:`RegionViolation`.
    """
    if which not in WHICH:
        raise ValueError(f"which must be one of {WHICH}")
    g = field.grid
    if not (0.0 <= z <= g.Z and 0.0 <= t <= g.T):
        raise OutOfDomain(f"(z,t)=({z},{t}) outside [0,{g.Z}]x[0,{g.T}]")
    k_arr = np.atleast_1d(np.asarray(k, dtype=complex))
    m = k_arr.size
    H = np.full((m, 2, 2), np.nan, dtype=complex)
    zero = field.meta.get("preset") == "zero"
    used = 2.0 * g.dz if z_step is None else z_step
    if z_step is None:
        used = min(used, Z_STEP_MAX_H3 if which == "H3" else Z_STEP_MAX_T_BASED)
    for col in columns:
        y = _unit(m, col)
        if zero:
            H[:, :, col] = y
            continue
        if which == "H3":
            if z < g.Z:
                zs = min(2.0 * g.dz, Z_STEP_MAX_H3) if z_step is None else z_step
                y = z_leg(field, t, g.Z, z, k_arr, col, y, step=zs)
        else:
            t_base = 0.0 if which == "H1" else g.T
            if t != t_base:
                y = t_leg(field, t_base, t, k_arr, col, y, step=t_step)
            if z > 0:
                zs = min(2.0 * g.dz, Z_STEP_MAX_T_BASED) if z_step is None else z_step
                y = z_leg(field, t, 0.0, z, k_arr, col, y, step=zs)
        H[:, :, col] = y
    if np.ndim(k) == 0:
        H = H[0]
    tail = _tail_bound(field, t) if which == "H3" else 0.0
    return EigenfunctionEval(H, which, float(z), float(t), np.asarray(k, dtype=complex), used, 4, tail)


def _tail_bound(field: PotentialField, t: float) -> float:
    """Crude bound on the neglected integral beyond Z: |r(Z,t)| times the sponge width."""
    r, _, _ = field.profile(t)
    return float(abs(r[-1]))


def sweep_H3_z(field: PotentialField, t: float, k, col: int, z_step=None):
    """Column ``col`` of H3 on the even z-nodes, from Z down to 0.

    Returns ``(z_nodes, Y)`` with ``Y`` of shape ``(len(z_nodes), m, 2)``
    ordered by increasing z.
    """
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    _, zs, traj = z_leg(field, t, field.grid.Z, 0.0, k, col, _unit(k.size, col), step=z_step, keep=True)
    return zs[::-1], traj[::-1]


def sweep_t(which: str, field: PotentialField, k, col: int, t_step=None, scale=T_STEP_SCALE):
    """Column ``col`` of H1 or H2 at z=0 on the whole t-leg.

    Returns ``(t_nodes, Y)`` ordered by increasing t.
    """
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    T = field.grid.T
    if which == "H1":
        _, ts, traj = t_leg(field, 0.0, T, k, col, _unit(k.size, col), step=t_step, keep=True, scale=scale)
        return ts, traj
    if which == "H2":
        _, ts, traj = t_leg(field, T, 0.0, k, col, _unit(k.size, col), step=t_step, keep=True, scale=scale)
        return ts[::-1], traj[::-1]
    raise ValueError("sweep_t handles H1 and H2 only")


# ------------------------------------------------------------ asymptotics


def ladder(arg: float, magnitudes: Sequence[float] = LADDER_MAGNITUDES) -> np.ndarray:
    """k-values with k^2 - 1/2 = |k|^2 e^{i arg} for the given magnitudes."""
    mags = np.asarray(magnitudes, dtype=float)
    return np.sqrt(mags**2 * np.exp(1j * arg) + 0.5)


#: ray (argument of k^2 - 1/2) on which each column of each eigenfunction is
#: bounded when evaluated away from the base point
LADDER_RAYS = {
    ("H1", 0): -3 * np.pi / 4,
    ("H1", 1): 3 * np.pi / 4,
    ("H2", 0): -np.pi / 4,
    ("H2", 1): np.pi / 4,
    ("H3", 0): np.pi / 4,
    ("H3", 1): -np.pi / 4,
}


@dataclass(frozen=True)
class AsymptoticCoeffs:
    """Coefficients of H = I + h1/k + h2/k^2 + h3/k^3 + ... .

    Entries belonging to columns that were not fitted are NaN.
    """

    h1: np.ndarray
    h2: np.ndarray
    h3: np.ndarray
    residual: float
    kmax: float = np.nan
    extra: dict = dc_field(default_factory=dict)


def _check_ladder(ks: np.ndarray):
    if ks.size < 5:
        raise IllConditionedFit(f"ladder has {ks.size} points; at least 5 are needed")
    mags = np.sort(np.abs(ks))
    if mags[-1] / mags[0] < 2.0 or np.min(np.diff(mags) / mags[:-1]) < 0.05:
        raise IllConditionedFit("ladder magnitudes are too clustered for a stable fit")


def fit_parity(ks: np.ndarray, values: np.ndarray, odd: bool, nterms: int = 3):
    """Least-squares fit of ``values(k) ~ sum_j c_j k^{-p_j}``.

    ``p_j`` runs over odd powers 1,3,5,... when ``odd`` and even powers
    2,4,6,... otherwise.  ``values`` has shape ``(len(ks), ...)``.  Returns
    ``(coeffs, rms_residual)`` with coeffs of shape ``(nterms, ...)``.
    """
    ks = np.asarray(ks, dtype=complex)
    powers = np.arange(nterms) * 2 + (1 if odd else 2)
    V = ks[:, None] ** (-powers[None, :])
    # column scaling keeps the Vandermonde system well conditioned
    sc = np.abs(V).max(axis=0)
    Vs = V / sc
    if np.linalg.cond(Vs) > 1e12:
        raise IllConditionedFit("Vandermonde matrix of the ladder is singular")
    flat = values.reshape(len(ks), -1)
    c, *_ = np.linalg.lstsq(Vs, flat, rcond=None)
    res = flat - Vs @ c
    c = (c / sc[:, None]).reshape((nterms,) + values.shape[1:])
    rms = float(np.sqrt(np.mean(np.abs(res) ** 2))) if res.size else 0.0
    return c, rms


def fit_column(ks, col_vals: np.ndarray, col: int, nterms: int = 3):
    """Expansion coefficients of one column from its values on a ladder.

    Returns ``(c, residual)`` where ``c[j]`` is the column of ``h_{j+1}``
    for j = 0, 1, 2.  Off-diagonal entries carry odd powers of 1/k and the
    diagonal entry even powers.
    """
    ks = np.asarray(ks, dtype=complex)
    diag = col_vals[:, col] - 1.0
    off = col_vals[:, 1 - col]
    co, ro = fit_parity(ks, off, odd=True, nterms=nterms)
    cd, rd = fit_parity(ks, diag, odd=False, nterms=nterms)
    c = np.zeros((3, 2), dtype=complex)
    c[0, 1 - col] = co[0]
    c[2, 1 - col] = co[1]
    c[1, col] = cd[0]
    return c, max(ro, rd)


def asymptotic_coeffs(
    which: str,
    field: PotentialField,
    z: float,
    t: float,
    ladder_k=None,
    columns: Sequence[int] = (0, 1),
    **kw,
) -> AsymptoticCoeffs:
    """Fit the large-k expansion of ``which`` at ``(z, t)``.

    Each column is evaluated on its own admissible ray (``LADDER_RAYS``)
    unless ``ladder_k`` is given, in which case it is used for every column.
    """
    h = np.full((3, 2, 2), np.nan, dtype=complex)
    res = 0.0
    kmax = 0.0
    for col in columns:
        ks = ladder(LADDER_RAYS[(which, col)]) if ladder_k is None else np.asarray(ladder_k, dtype=complex)
        _check_ladder(ks)
        vals = solve_H(which, field, z, t, ks, columns=(col,), **kw).H[:, :, col]
        c, r = fit_column(ks, vals, col)
        h[:, :, col] = c
        res = max(res, r)
        kmax = max(kmax, float(np.abs(ks).max()))
    return AsymptoticCoeffs(h[0], h[1], h[2], res, kmax)


# ------------------------------------------------------------------- dump

EIGEN_HEADER = (
    "which,z,t,re_k,im_k,re_h11,im_h11,re_h12,im_h12,re_h21,im_h21,re_h22,im_h22,det_err"
)


def write_eigen_csv(path, evals: Sequence[EigenfunctionEval]) -> Path:
    path = Path(path)
    lines = [EIGEN_HEADER]
    for ev in evals:
        H = np.reshape(ev.H, (-1, 2, 2))
        ks = np.reshape(ev.k, (-1,))
        for kk, M in zip(ks, H):
            d = abs(det2(M) - 1.0)
            vals = [M[0, 0], M[0, 1], M[1, 0], M[1, 1]]
            nums = [f"{x:.17g}" for v in vals for x in (v.real, v.imag)]
            lines.append(
                ",".join([ev.which, f"{ev.z:.17g}", f"{ev.t:.17g}", f"{kk.real:.17g}", f"{kk.imag:.17g}", *nums, f"{d:.17g}"])
            )
    path.write_text("\n".join(lines) + "\n")
    return path
