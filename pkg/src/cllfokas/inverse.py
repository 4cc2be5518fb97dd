"""Recovering the potential and its boundary values from eigenfunction asymptotics.

With ``h(z,t) = (h1)_{12}``, the (1,2) entry of the 1/k coefficient of any of
the eigenfunctions at ``(z, t)``,

    r = -2i h exp(2i theta),     theta(z,t) = int Theta along (0,0)->(0,t)->(z,t),

and ``Theta`` itself is expressible through ``h`` (see :func:`theta_from_h`).
At ``z = 0`` the t-problem alone yields ``s0`` and ``s1`` from the first three
coefficients (:func:`recover_boundary`).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .core import ThetaDensity, mat2
from .errors import IllConditionedFit, LadderInadmissible
from .potential import PotentialField, _d1
from .spectral import _safe_div
from .volterra import LADDER_MAGNITUDES, fit_column, ladder, sweep_H3_z, sweep_t

#: ray (argument of lam) for each eigenfunction column used here
RAY_H3 = -np.pi / 4
RAY_H1 = -np.pi / 4
RAY_H2 = np.pi / 4
#: exponent of the leading 1/k_max error removed by Richardson extrapolation
RICHARDSON_POWER = 6
#: smallest ladder maximum for which the expansion is trusted
MIN_KMAX = 16.0


def theta_from_h(h, h_z) -> ThetaDensity:
    """Theta densities in terms of h: theta1 = |h|^2, theta2 = -2|h|^4 - 2 Im(conj(h) h_z)."""
    h = np.asarray(h, dtype=complex)
    h_z = np.asarray(h_z, dtype=complex)
    a2 = (h * h.conj()).real
    return ThetaDensity(a2, -2.0 * a2**2 - 2.0 * (h.conj() * h_z).imag)


def r_from_h(h, theta):
    return -2j * np.asarray(h, dtype=complex) * np.exp(2j * np.asarray(theta, dtype=float))


def check_ladder(mags) -> np.ndarray:
    mags = np.asarray(mags, dtype=float)
    if mags.size < 5 or np.any(np.diff(mags) <= 0):
        raise LadderInadmissible("ladder needs at least 5 strictly increasing magnitudes")
    return mags


def _richardson(a_lo, a_hi, ratio: float, p: int = RICHARDSON_POWER):
    """Combine estimates from k_max and ratio*k_max assuming error ~ k_max^-p."""
    f = ratio**p
    return (f * a_hi - a_lo) / (f - 1.0)


def _ladder_warning(mags):
    if mags[-1] < MIN_KMAX:
        warnings.warn(
            f"ladder maximum |k|={mags[-1]:g} is below {MIN_KMAX:g}; expansion error will be large",
            RuntimeWarning,
            stacklevel=3,
        )


# ------------------------------------------------------------- z direction


def h_profile(field: PotentialField, t: float, mags=LADDER_MAGNITUDES, stride: int = 1):
    """h(z, t) and the fitted h-coefficients on the z nodes from H3 column 2.

    Returns ``(z, h1_12)``; ``stride`` selects every ``stride``-th node.
    """
    ks = ladder(RAY_H3, mags)
    step = stride * field.grid.dz
    zs, Y = sweep_H3_z(field, t, ks, 1, z_step=step)
    h = np.empty(zs.size, dtype=complex)
    for i in range(zs.size):
        c, _ = fit_column(ks, Y[i], 1)
        h[i] = c[0, 0]
    return zs, h


@dataclass(frozen=True)
class Reconstruction:
    z: np.ndarray
    t: np.ndarray
    r_rec: np.ndarray
    h: np.ndarray
    theta_rec: ThetaDensity
    theta_cum: np.ndarray
    abs_err: np.ndarray
    sup_rel_err: float
    l2_rel_err: float
    mags: tuple


def _assemble(z, t, h):
    """theta_cum and r from h on a (t, z) grid."""
    dz = z[1] - z[0]
    hz = _d1(h, dz)
    dens = theta_from_h(h, hz)
    th2_0 = dens.theta2[:, 0]
    if t.size > 1:
        th_t = CubicSpline(t, th2_0).antiderivative()(t)
    else:
        th_t = np.zeros(1)
    th_z = CubicSpline(z, dens.theta1, axis=1).antiderivative()(z)
    theta = th_t[:, None] + th_z
    return r_from_h(h, theta), dens, theta


def reconstruct_field(
    field: PotentialField,
    mags=LADDER_MAGNITUDES,
    ratio: float = 2.0,
    stride: int = 1,
    extrapolate: bool = True,
    interior: float = 0.8,
) -> Reconstruction:
    """Round-trip r(z,t) through the large-k expansion of H3.

    ``h`` is fitted on the ladder ``mags`` and, if ``extrapolate``, also on
    ``ratio * mags``; the two are Richardson-combined in 1/k_max.  Errors are
    reported relative to max |r| over the central ``interior`` fraction of z.
    """
    mags = check_ladder(mags)
    _ladder_warning(mags)
    if field.meta.get("preset") == "zero":
        zs = field.z[::stride]
        zero = np.zeros((field.t.size, zs.size), dtype=complex)
        dens = ThetaDensity(zero.real, zero.real)
        return Reconstruction(zs, field.t, zero, zero, dens, zero.real, zero.real, 0.0, 0.0, tuple(mags))
    rows = []
    for t in field.t:
        zs, h = h_profile(field, t, mags, stride)
        if extrapolate:
            _, h2 = h_profile(field, t, ratio * mags, stride)
            h = _richardson(h, h2, ratio)
        rows.append(h)
    H = np.array(rows)
    r_rec, dens, theta = _assemble(zs, field.t, H)
    ref = field.r[:, ::stride]
    err = np.abs(r_rec - ref)
    lo, hi = (1 - interior) / 2 * field.grid.Z, (1 + interior) / 2 * field.grid.Z
    m = (zs >= lo - 1e-12) & (zs <= hi + 1e-12)
    scale = max(float(np.abs(ref[:, m]).max()), 1e-300)
    sup = float(err[:, m].max()) / scale
    l2 = float(np.sqrt(np.mean(err[:, m] ** 2))) / scale
    return Reconstruction(zs, field.t, r_rec, H, dens, theta, err, sup, l2, tuple(mags))


# ------------------------------------------------------------- t direction


@dataclass(frozen=True)
class BoundaryRecovery:
    t: np.ndarray
    s0_rec: np.ndarray
    s1_rec: np.ndarray
    theta2_rec: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    h3: np.ndarray
    s0_err: float = np.nan
    s1_err: float = np.nan


def theta2_from_coeffs(h1, h2_22, h3):
    """Theta2 at z=0 from (h1)_12, (h2)_22 and (h3)_12 of a t-eigenfunction."""
    a2 = np.abs(h1) ** 2
    return 2 * a2**2 - 4 * (np.conj(h1) * h3).real + 4 * a2 * np.real(h2_22) + 2 * a2


def boundary_coeffs(field: PotentialField, mags=LADDER_MAGNITUDES):
    """(t, h1_12, h2_22, h3_12) along z=0.

    H2 (normalised at T) is used on t <= T/2 and H1 (normalised at 0) on
    t > T/2, so each sample sits at least T/2 from its base point where
    the expansion is uniform.
    """
    ks_a = ladder(RAY_H2, mags)
    ks_b = ladder(RAY_H1, mags)
    T = field.grid.T
    ta, Ya = sweep_t("H2", field, ks_a, 1)
    tb, Yb = sweep_t("H1", field, ks_b, 1)
    out = []
    for ts, Y, ks, keep in ((ta, Ya, ks_a, ta <= T / 2), (tb, Yb, ks_b, tb > T / 2)):
        for i in np.nonzero(keep)[0]:
            c, _ = fit_column(ks, Y[i], 1)
            out.append((ts[i], c[0, 0], c[1, 1], c[2, 0]))
    out.sort(key=lambda row: row[0])
    arr = np.array(out)
    return arr[:, 0].real, arr[:, 1], arr[:, 2], arr[:, 3]


def recover_boundary(
    field: PotentialField,
    mags=LADDER_MAGNITUDES,
    ratio: float = 2.0,
    extrapolate: bool = True,
    t_eval=None,
) -> BoundaryRecovery:
    """s0 and s1 from the t-expansion at z=0, optionally Richardson-extrapolated.

    s0 = -2i h1 e^{2i theta}, theta = int_0^t Theta2 with Theta2 from
    :func:`theta2_from_coeffs`, and
    s1 = (4 h3 - |s0|^2 h1) e^{2i theta} - 2i s0 h2_22 - i s0 + (i/2) s0 |s0|^2.
    """
    mags = check_ladder(mags)
    _ladder_warning(mags)
    t_eval = field.t if t_eval is None else np.asarray(t_eval, dtype=float)
    if field.meta.get("preset") == "zero":
        z0 = np.zeros(t_eval.size, dtype=complex)
        return BoundaryRecovery(t_eval, z0, z0, z0.real, z0, z0, z0, 0.0, 0.0)

    def coeffs_on(m):
        ts, a, b, c = boundary_coeffs(field, m)
        return [CubicSpline(ts, x)(t_eval) for x in (a, b, c)]

    h1, h2, h3 = coeffs_on(mags)
    if extrapolate:
        g1, g2, g3 = coeffs_on(ratio * mags)
        h1, h2, h3 = (_richardson(x, y, ratio) for x, y in ((h1, g1), (h2, g2), (h3, g3)))
    th2 = theta2_from_coeffs(h1, h2, h3)
    theta = CubicSpline(t_eval, th2).antiderivative()(t_eval) if t_eval.size > 1 else np.zeros(1)
    e = np.exp(2j * theta)
    s0 = -2j * h1 * e
    m2 = np.abs(s0) ** 2
    s1 = (4 * h3 - m2 * h1) * e - 2j * s0 * h2 - 1j * s0 + 0.5j * s0 * m2
    s0_ref, s1_ref, _ = field.boundary(t_eval)
    return BoundaryRecovery(
        t_eval,
        s0,
        s1,
        th2,
        h1,
        h2,
        h3,
        float(np.max(np.abs(s0 - s0_ref))),
        float(np.max(np.abs(s1 - s1_ref))),
    )


# ------------------------------------------------------------------- RHPs


def assemble_x_rhp(k, z: float, u, v, ubar, vbar) -> np.ndarray:
    """Jump of the z-problem on the real lam axis.

    G = [[1, -delta e^{2i lam z}], [-deltabar e^{-2i lam z}, 1 + delta deltabar]]
    with delta = v / ubar and deltabar its reflection vbar / u.
    """
    lam = np.asarray(k, dtype=complex) ** 2 - 0.5
    delta = _safe_div(v, ubar, "ubar")
    deltab = _safe_div(vbar, u, "u")
    e = np.exp(2j * lam * z)
    one = np.ones_like(e)
    return mat2(one, -delta * e, -deltab / e, 1 + delta * deltab)


def assemble_t_rhp(k, t: float, U, V, Ubar, Vbar) -> np.ndarray:
    """Jump of the t-problem on the set where lam^2 is real.

    G = [[1, (V/Ubar) e^{-4i lam^2 t}], [(Vbar/U) e^{4i lam^2 t}, 1/(U Ubar)]]
    """
    lam = np.asarray(k, dtype=complex) ** 2 - 0.5
    e = np.exp(4j * lam**2 * t)
    one = np.ones_like(e)
    a = _safe_div(V, Ubar, "Ubar")
    b = _safe_div(Vbar, U, "U")
    c = _safe_div(one, U * Ubar, "U*Ubar")
    return mat2(one, a / e, b * e, c)


# ------------------------------------------------------------------ output

RECON_HEADER = "z,t,re_r_rec,im_r_rec,abs_err"
BOUNDARY_HEADER = "t,re_s0,im_s0,re_s1,im_s1"


def write_reconstruction_csv(path, rec: Reconstruction) -> Path:
    path = Path(path)
    Tg, Zg = np.meshgrid(rec.t, rec.z, indexing="ij")
    data = np.column_stack([Zg.ravel(), Tg.ravel(), rec.r_rec.real.ravel(), rec.r_rec.imag.ravel(), rec.abs_err.ravel()])
    with open(path, "w", newline="\n") as fh:
        fh.write(RECON_HEADER + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")
    return path


def write_boundary_csv(path, br: BoundaryRecovery) -> Path:
    path = Path(path)
    data = np.column_stack([br.t, br.s0_rec.real, br.s0_rec.imag, br.s1_rec.real, br.s1_rec.imag])
    with open(path, "w", newline="\n") as fh:
        fh.write(BOUNDARY_HEADER + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")
    return path
