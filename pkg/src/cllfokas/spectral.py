"""Spectral functions, the sectionally analytic function E and its jumps.

Notation
--------
``lam = k**2 - 1/2`` and, for any spectral function ``f``,
``fbar(k) = conj(f(conj(k)))`` (the Schwarz reflection).  The regions D1..D4
are the open quadrants of the lam-plane

    D1: arg lam in (3pi/2, 2pi)     D2: (pi, 3pi/2)
    D3: (0, pi/2)                   D4: (pi/2, pi)

and the four rays between them carry the jumps.  The scattering matrices
are ``w = H3(0,0)`` and ``W = H2(0,0)``:

    w = [[ubar, v], [-vbar, u]],        W = [[Ubar, V], [-Vbar, U]],

so ``det w = u ubar + v vbar = 1`` and likewise for ``W``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import Region, det2, inv2, lam_of, mat2, phase_eta, region_of
from .errors import (
    DivisionFloor,
    NewtonDivergence,
    NonSimpleZero,
    RegionViolation,
    WindingAmbiguous,
)
from .integrators import GROWTH_LIMIT
from .potential import PotentialField
from .volterra import build_A1, solve_H, sweep_H3_z, sweep_t

FLOOR = 1e-12
RAYS = {0: 0.0, 1: np.pi / 2, 2: np.pi, 3: 3 * np.pi / 2}
#: jump label carried by each ray angle
RAY_LABEL = {0.0: "G2", np.pi / 2: "G3", np.pi: "G4", 3 * np.pi / 2: "G1"}
N_PER_RAY = 256
RHO_MAX = 16.0


def _bar(f: Callable, k):
    """Schwarz reflection conj(f(conj(k))) for a vectorised function f."""
    return np.conj(f(np.conj(np.asarray(k, dtype=complex))))


# ------------------------------------------------------------ admissibility


def uv_admissible(field: PotentialField, k) -> np.ndarray:
    """Where column 2 of H3(0,0) stays bounded: Im lam <= small slack."""
    lam = lam_of(k)
    return 2.0 * lam.imag * field.grid.Z <= np.log(GROWTH_LIMIT)


def UV_admissible(field: PotentialField, k) -> np.ndarray:
    """Where column 2 of H2(0,0) stays bounded: Im lam^2 >= -small slack."""
    lam = lam_of(k)
    return -4.0 * (lam**2).imag * field.grid.T <= np.log(GROWTH_LIMIT)


# --------------------------------------------------------- spectral data


def compute_uv(field: PotentialField, k):
    """(u, v) from the second column of H3 at (0, 0)."""
    k = np.asarray(k, dtype=complex)
    if not np.all(uv_admissible(field, k)):
        raise RegionViolation("u, v requested where Im(k^2 - 1/2) > 0")
    H = solve_H("H3", field, 0.0, 0.0, np.atleast_1d(k), columns=(1,)).H
    v, u = H[:, 0, 1], H[:, 1, 1]
    if k.ndim == 0:
        return u[0], v[0]
    return u.reshape(k.shape), v.reshape(k.shape)


def compute_UV(field: PotentialField, k):
    """(U, V) from the second column of H2 at (0, 0), i.e. the t-problem on [0, T]."""
    k = np.asarray(k, dtype=complex)
    if not np.all(UV_admissible(field, k)):
        raise RegionViolation("U, V requested where Im(k^2 - 1/2)^2 < 0")
    H = solve_H("H2", field, 0.0, 0.0, np.atleast_1d(k), columns=(1,)).H
    V, U = H[:, 0, 1], H[:, 1, 1]
    if k.ndim == 0:
        return U[0], V[0]
    return U.reshape(k.shape), V.reshape(k.shape)


@dataclass(frozen=True)
class SpectralData:
    """u, v, U, V on a set of k; NaN where a function is not defined."""

    k: np.ndarray
    u: np.ndarray
    v: np.ndarray
    U: np.ndarray
    V: np.ndarray
    T: float
    grid: dict = dc_field(default_factory=dict)


def spectral_data(field: PotentialField, k, grid: dict | None = None) -> SpectralData:
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    u = np.full(k.shape, np.nan, dtype=complex)
    v = u.copy()
    U = u.copy()
    V = u.copy()
    m1 = uv_admissible(field, k)
    if m1.any():
        u[m1], v[m1] = compute_uv(field, k[m1])
    m2 = UV_admissible(field, k)
    if m2.any():
        U[m2], V[m2] = compute_UV(field, k[m2])
    return SpectralData(k, u, v, U, V, field.grid.T, dict(grid or {}))


@dataclass(frozen=True)
class DerivedData:
    """beta, delta, Delta at k together with their Schwarz reflections."""

    k: np.ndarray
    beta: np.ndarray
    delta: np.ndarray
    Delta: np.ndarray
    beta_bar: np.ndarray
    delta_bar: np.ndarray
    Delta_bar: np.ndarray


def _derived_from(sd: SpectralData, sdc: SpectralData, beta_sign: float):
    """beta, delta, Delta at sd.k given spectral data ``sdc`` at conj(sd.k)."""
    ub, vb, Ub, Vb = (np.conj(x) for x in (sdc.u, sdc.v, sdc.U, sdc.V))
    beta = sd.u * Ub + beta_sign * sd.v * Vb
    delta = _safe_div(sd.v, ub, "ubar")
    Delta = _safe_div(-Vb, sd.u * beta, "u*beta")
    return beta, delta, Delta


def _safe_div(a, b, what: str, floor: float = FLOOR):
    a = np.asarray(a)
    b = np.asarray(b)
    bad = np.isfinite(b) & (np.abs(b) < floor * np.maximum(1.0, np.abs(a)))
    if np.any(bad):
        raise DivisionFloor(f"|{what}| below floor {floor:g}; route through find_zeros")
    with np.errstate(invalid="ignore", divide="ignore"):
        return a / b


def derived_quantities(field: PotentialField, k, beta_sign: float = 1.0) -> DerivedData:
    """beta = u Ubar + v Vbar, delta = v / ubar, Delta = -Vbar / (u beta).

    ``beta_sign=-1`` flips the sign of the v Vbar term for sensitivity runs.
    Quantities whose inputs are undefined at a given k come out as NaN.
    """
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    sd = spectral_data(field, k)
    sdc = spectral_data(field, np.conj(k))
    beta, delta, Delta = _derived_from(sd, sdc, beta_sign)
    betab, deltab, Deltab = _derived_from(sdc, sd, beta_sign)
    return DerivedData(k, beta, delta, Delta, np.conj(betab), np.conj(deltab), np.conj(Deltab))


# ---------------------------------------------------------- sectional E


@dataclass(frozen=True)
class SectionalEval:
    E: np.ndarray
    region: Region
    k: complex
    z: float
    t: float


def _col(which, field, z, t, k, col):
    return solve_H(which, field, z, t, np.array([k]), columns=(col,)).H[0, :, col]


def _scalar(f, k):
    return complex(np.atleast_1d(f(np.array([k])))[0])


def evaluate_E(
    field: PotentialField, z: float, t: float, k: complex, region: Region | None = None, beta_sign: float = 1.0
) -> SectionalEval:
    """Assemble E in the region containing ``k`` (or the one forced by ``region``).

    D1: (a2/beta, b3)   D2: (a1/u, b3)   D3: (a3, b2/betabar)   D4: (a3, b1/ubar)

    where a_j, b_j are the first and second columns of H_j at (z, t).  A
    forced region lets one evaluate the boundary values of E on a ray.
    """
    k = complex(k)
    reg = region_of(k) if region is None else region
    if reg is Region.BOUNDARY:
        raise RegionViolation("k lies on a jump ray; pass the region explicitly")
    uf = lambda kk: compute_uv(field, kk)[0]

    def beta_at(kk):
        u, v = compute_uv(field, kk)
        Ub, Vb = (np.conj(x) for x in compute_UV(field, np.conj(kk)))
        return u * Ub + beta_sign * v * Vb

    if reg is Region.D1:
        c1 = _col("H2", field, z, t, k, 0) / _guard(beta_at(np.array([k]))[0], "beta")
        c2 = _col("H3", field, z, t, k, 1)
    elif reg is Region.D2:
        c1 = _col("H1", field, z, t, k, 0) / _guard(_scalar(uf, k), "u")
        c2 = _col("H3", field, z, t, k, 1)
    elif reg is Region.D3:
        c1 = _col("H3", field, z, t, k, 0)
        c2 = _col("H2", field, z, t, k, 1) / _guard(np.conj(_scalar(beta_at, np.conj(k))), "betabar")
    else:
        c1 = _col("H3", field, z, t, k, 0)
        c2 = _col("H1", field, z, t, k, 1) / _guard(np.conj(_scalar(uf, np.conj(k))), "ubar")
    E = mat2(c1[0], c2[0], c1[1], c2[1])
    return SectionalEval(E, reg, k, float(z), float(t))


def _guard(x: complex, what: str) -> complex:
    if abs(x) < FLOOR:
        raise DivisionFloor(f"|{what}| = {abs(x):.3g} below floor")
    return complex(x)


# ------------------------------------------------------------------ jumps


def _ray_angle(ray) -> float:
    a = float(ray) % (2 * np.pi)
    for ang in RAYS.values():
        if abs(a - ang) < 1e-9:
            return ang
    raise ValueError(f"ray must be one of 0, pi/2, pi, 3pi/2 (got {ray})")


def jump_matrix(ray, z: float, t: float, k, d: DerivedData) -> np.ndarray:
    """Jump G with E_minus = E_plus G on the given ray of the lam-plane.

    The plus side is D3 on the rays 0 and pi/2 and D2 on the rays pi and
    3pi/2.

    G1 (3pi/2): [[1, 0], [Delta e^{2i eta}, 1]]
    G3 (pi/2):  [[1, Deltabar e^{-2i eta}], [0, 1]]
    G4 (pi):    [[1, -delta e^{-2i eta}], [-deltabar e^{2i eta}, 1 + delta deltabar]]
    G2 (0):     G3 G4^{-1} G1
    """
    ang = _ray_angle(ray)
    k = np.asarray(k, dtype=complex)
    e = np.exp(2j * phase_eta(k, z, t))
    one = np.ones_like(e)
    zero = np.zeros_like(e)
    G1 = lambda: mat2(one, zero, d.Delta * e, one)
    G3 = lambda: mat2(one, d.Delta_bar / e, zero, one)
    G4 = lambda: mat2(one, -d.delta / e, -d.delta_bar * e, 1 + d.delta * d.delta_bar)
    if ang == 3 * np.pi / 2:
        G = G1()
    elif ang == np.pi / 2:
        G = G3()
    elif ang == np.pi:
        G = G4()
    else:
        G = G3() @ inv2(G4()) @ G1()
    if np.any(~np.isfinite(G)):
        raise DivisionFloor("jump matrix undefined at some samples")
    return G


#: (plus side, minus side) of each ray
RAY_SIDES = {
    0.0: (Region.D3, Region.D1),
    np.pi / 2: (Region.D3, Region.D4),
    np.pi: (Region.D2, Region.D4),
    3 * np.pi / 2: (Region.D2, Region.D1),
}


def jump_residuals(field: PotentialField, ray, z: float, t: float, rhos, beta_sign: float = 1.0) -> np.ndarray:
    """max-entry mismatch |E_minus - E_plus G| at lam = rho e^{i ray} for each rho."""
    ang = _ray_angle(ray)
    plus, minus = RAY_SIDES[ang]
    out = np.empty(len(rhos))
    for i, rho in enumerate(rhos):
        k = np.sqrt(rho * np.exp(1j * ang) + 0.5)
        Ep = evaluate_E(field, z, t, k, region=plus, beta_sign=beta_sign).E
        Em = evaluate_E(field, z, t, k, region=minus, beta_sign=beta_sign).E
        d = derived_quantities(field, np.array([k]), beta_sign)
        G = jump_matrix(ang, z, t, k, d)[0]
        out[i] = np.abs(Em - Ep @ G).max()
    return out


def ray_grid(angle: float, n: int = N_PER_RAY, rho_max: float = RHO_MAX) -> np.ndarray:
    """k on one ray, quadratically clustered toward lam = 0 (k^2 = 1/2)."""
    s = (np.arange(1, n + 1) / n) ** 2
    lam = rho_max * s * np.exp(1j * angle)
    return np.sqrt(lam + 0.5)


def default_k_grid(n: int = N_PER_RAY, rho_max: float = RHO_MAX):
    """Concatenated ray grids, with the ray angle of every sample."""
    ks, angs = [], []
    for ang in RAYS.values():
        g = ray_grid(ang, n, rho_max)
        ks.append(g)
        angs.append(np.full(g.size, ang))
    return np.concatenate(ks), np.concatenate(angs)


# ------------------------------------------------------------------ zeros


@dataclass
class ZeroSet:
    xi: list = dc_field(default_factory=list)
    mu: list = dc_field(default_factory=list)
    residuals: dict = dc_field(default_factory=dict)
    windings: list = dc_field(default_factory=list)


def _contour(box, n_side: int):
    x0, x1, y0, y1 = box
    s = np.linspace(0, 1, n_side, endpoint=False)
    pts = np.concatenate(
        [
            x0 + (x1 - x0) * s + 1j * y0,
            x1 + 1j * (y0 + (y1 - y0) * s),
            x1 - (x1 - x0) * s + 1j * y1,
            x0 + 1j * (y1 - (y1 - y0) * s),
        ]
    )
    return np.append(pts, pts[0])


def _dlog(vals):
    """Unwrapped increments of log f along a closed polyline."""
    ratio = vals[1:] / vals[:-1]
    return np.log(np.abs(ratio)) + 1j * np.angle(ratio)


def winding_number(f: Callable, box, n_side: int = 256, max_refine: int = 6) -> float:
    """Argument-principle count of zeros of ``f`` inside ``box=(x0,x1,y0,y1)``.

    The boundary is refined until consecutive phase increments stay below
    pi/4.  Raises WindingAmbiguous if |f| nearly vanishes on the boundary
    or the count is not close to an integer.
    """
    for _ in range(max_refine):
        pts = _contour(box, n_side)
        vals = f(pts)
        scale = np.max(np.abs(vals))
        if np.min(np.abs(vals)) < 1e-8 * max(scale, 1e-300):
            raise WindingAmbiguous("search-box boundary passes too close to a zero")
        d = _dlog(vals)
        if np.max(np.abs(d.imag)) < np.pi / 4:
            w = float(np.sum(d.imag) / (2 * np.pi))
            if abs(w - round(w)) > 0.1:
                raise WindingAmbiguous(f"non-integer winding {w:.3f}")
            return w
        n_side *= 2
    raise WindingAmbiguous("phase of f could not be resolved on the boundary")


def derivative(f: Callable, k, step=None):
    """Fourth-order central difference f'(k) with step 1e-3 |k| (analytic f)."""
    k = np.asarray(k, dtype=complex)
    h = 1e-3 * np.maximum(np.abs(k), 1e-3) if step is None else step
    return (f(k - 2 * h) - 8 * f(k - h) + 8 * f(k + h) - f(k + 2 * h)) / (12 * h)


def _newton(f, z0, tol, scale, maxit=50):
    z = complex(z0)
    for _ in range(maxit):
        fz = complex(np.atleast_1d(f(np.array([z])))[0])
        if abs(fz) <= tol * scale:
            return z, abs(fz)
        dz = fz / complex(np.atleast_1d(derivative(f, np.array([z]), step=1e-4 * max(abs(z), 1.0)))[0])
        z -= dz
        if not np.isfinite(z):
            break
    fz = complex(np.atleast_1d(f(np.array([z])))[0])
    if abs(fz) <= tol * scale:
        return z, abs(fz)
    raise NewtonDivergence(f"Newton did not converge from {z0} (|f|={abs(fz):.3g})")


def zeros_in_box(f: Callable, box, tol: float = 1e-10, n_side: int = 256):
    """Zeros of an analytic ``f`` inside ``box`` via contour moments plus Newton.

    Returns ``(zeros, residuals, winding)``.
    """
    w = winding_number(f, box, n_side)
    n = int(round(w))
    if n < 0:
        raise WindingAmbiguous("negative winding: f has poles in the box")
    if n == 0:
        return [], [], w
    pts = _contour(box, n_side * 4)
    vals = f(pts)
    d = _dlog(vals)
    mid = 0.5 * (pts[1:] + pts[:-1])
    # power sums s_p = sum zeta_j^p from the moments of dlog f
    s = [np.sum(mid**p * d) / (2j * np.pi) for p in range(1, n + 1)]
    # Newton identities to monic polynomial coefficients
    e = [1.0 + 0j]
    for m in range(1, n + 1):
        acc = sum((-1) ** (i - 1) * e[m - i] * s[i - 1] for i in range(1, m + 1))
        e.append(acc / m)
    poly = [(-1) ** m * e[m] for m in range(n + 1)]
    guesses = np.roots(poly) if n > 1 else np.array([-poly[1]])
    scale = float(np.max(np.abs(vals)))
    zs, res = [], []
    for g in guesses:
        zz, r = _newton(f, g, tol, scale)
        if any(abs(zz - q) < 1e-8 * max(1.0, abs(zz)) for q in zs):
            raise NonSimpleZero(f"repeated zero near {zz}")
        zs.append(zz)
        res.append(r)
    order = np.lexsort((np.imag(zs), np.real(zs)))
    return [zs[i] for i in order], [res[i] for i in order], w


def find_zeros(f: Callable, box, family: str = "xi", tol: float = 1e-10, n_side: int = 256) -> ZeroSet:
    """Zeros of ``f`` in ``box`` completed to +- pairs (f is even in k)."""
    zs, res, w = zeros_in_box(f, box, tol, n_side)
    out = ZeroSet(windings=[w])
    pairs, pres = [], []
    for z, r in zip(zs, res):
        for cand in (z, -z):
            if not any(abs(cand - q) < 1e-8 * max(1.0, abs(cand)) for q in pairs):
                pairs.append(cand)
                pres.append(r if cand == z else float(abs(np.atleast_1d(f(np.array([cand])))[0])))
    if family == "xi":
        out.xi = pairs
    else:
        out.mu = pairs
    out.residuals = {f"{family}{j}": r for j, r in enumerate(pres)}
    return out


# -------------------------------------------------------------- residues


@dataclass(frozen=True)
class Residue:
    """Res E[:, target] = coefficient * exp(sign*2i eta(location)) * E[:, source]."""

    family: str
    location: complex
    target: int
    source: int
    coefficient: complex
    phase_sign: int


def residue_coefficients(field: PotentialField, zeros: ZeroSet, beta_sign: float = 1.0) -> list:
    """Residue conditions of E at the zeros of u, ubar, beta and betabar.

    xi (u = 0, in D2):         column 1, coefficient vbar / u'
    conj(xi) (ubar = 0, D4):   column 2, coefficient -v / ubar'
    mu (beta = 0, in D1):      column 1, coefficient (vbar Ubar - ubar Vbar) / beta'
    conj(mu) (betabar = 0, D3): column 2, coefficient (u V - v U) / betabar'
    """
    out = []
    uf = lambda kk: compute_uv(field, kk)[0]
    vf = lambda kk: compute_uv(field, kk)[1]
    Uf = lambda kk: compute_UV(field, kk)[0]
    Vf = lambda kk: compute_UV(field, kk)[1]
    betaf = lambda kk: uf(kk) * _bar(Uf, kk) + beta_sign * vf(kk) * _bar(Vf, kk)

    def simple(dval, what):
        if abs(dval) < FLOOR:
            raise NonSimpleZero(f"derivative of {what} vanishes at a zero")
        return dval

    for xi in zeros.xi:
        xi = complex(xi)
        k1 = np.array([xi])
        du = simple(complex(derivative(uf, k1)[0]), "u")
        out.append(Residue("xi", xi, 0, 1, complex(_bar(vf, k1)[0]) / du, +1))
        xc = np.array([np.conj(xi)])
        dub = simple(complex(derivative(lambda kk: _bar(uf, kk), xc)[0]), "ubar")
        out.append(Residue("xi_bar", complex(xc[0]), 1, 0, -complex(vf(xc)[0]) / dub, -1))
    for mu in zeros.mu:
        mu = complex(mu)
        k1 = np.array([mu])
        db = simple(complex(derivative(betaf, k1)[0]), "beta")
        num = _bar(vf, k1) * _bar(Uf, k1) - _bar(uf, k1) * _bar(Vf, k1)
        out.append(Residue("mu", mu, 0, 1, complex(num[0]) / db, +1))
        mc = np.array([np.conj(mu)])
        dbb = simple(complex(derivative(lambda kk: _bar(betaf, kk), mc)[0]), "betabar")
        num = uf(mc) * Vf(mc) - vf(mc) * Uf(mc)
        out.append(Residue("mu_bar", complex(mc[0]), 1, 0, complex(num[0]) / dbb, -1))
    return out


# -------------------------------------------------------- global relation


def global_relation_residual(field: PotentialField, k, data: PotentialField | None = None) -> np.ndarray:
    """u V - U v - exp(4i lam^2 T) c+(k) for k in the closure of D2.

    ``c+ = int_0^Z exp(-2i lam z) (A1 H3)_{12}(z, T, k) dz`` by composite
    Simpson quadrature on the eigenfunction sweep.  ``data`` optionally
    supplies a different field for the t-problem (U, V), which is how
    inconsistent boundary data are probed.
    """
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    lam = lam_of(k)
    if np.any(lam.real > 1e-12 * np.maximum(1, np.abs(lam))) or np.any(lam.imag > 1e-12 * np.maximum(1, np.abs(lam))):
        raise RegionViolation("global relation is evaluated on the closure of D2 only")
    T = field.grid.T
    u, v = compute_uv(field, k)
    U, V = compute_UV(field if data is None else data, k)
    zs, Y = sweep_H3_z(field, T, k, 1)
    r, _, th = field.profile(T)
    # the sweep is on every other z node
    idx = np.rint(zs / field.grid.dz).astype(int)
    A = build_A1(r[idx][:, None], k[None, :], th[idx][:, None])
    integrand = (A[..., 0, 0] * Y[..., 0] + A[..., 0, 1] * Y[..., 1]) * np.exp(-2j * lam[None, :] * zs[:, None])
    cplus = _simpson(integrand, zs)
    return u * V - U * v - np.exp(4j * lam**2 * T) * cplus


def _simpson(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    from scipy.integrate import simpson

    return simpson(y, x=x, axis=0)


# ------------------------------------------------------------------ output

SPECTRAL_HEADER = "re_k,im_k,re_u,im_u,re_v,im_v,re_U,im_U,re_V,im_V,re_beta,im_beta,gr_resid_abs"


def write_spectral_csv(path, sd: SpectralData, beta: np.ndarray, gr: np.ndarray) -> Path:
    path = Path(path)
    cols = [sd.k, sd.u, sd.v, sd.U, sd.V, beta]
    lines = [SPECTRAL_HEADER]
    for i in range(sd.k.size):
        nums = []
        for c in cols:
            nums += [repr(float(c[i].real)), repr(float(c[i].imag))]
        nums.append(repr(float(gr[i])))
        lines.append(",".join(nums))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_zeros_json(path, zeros: ZeroSet, residues: Sequence[Residue]) -> Path:
    path = Path(path)
    items = []
    for fam, vals in (("xi", zeros.xi), ("mu", zeros.mu)):
        for j, z in enumerate(vals):
            items.append(
                {
                    "family": fam,
                    "re": float(np.real(z)),
                    "im": float(np.imag(z)),
                    "newton_residual": float(zeros.residuals.get(f"{fam}{j}", float("nan"))),
                }
            )
    res = [
        {
            "family": r.family,
            "re": r.location.real,
            "im": r.location.imag,
            "target_column": r.target + 1,
            "source_column": r.source + 1,
            "re_coefficient": r.coefficient.real,
            "im_coefficient": r.coefficient.imag,
            "phase_sign": r.phase_sign,
        }
        for r in residues
    ]
    doc = {"zeros": items, "residues": res, "windings": [float(w) for w in zeros.windings]}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
