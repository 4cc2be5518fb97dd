"""Direct solver for the CLL-NLS equation on the truncated half-line.

The equation is integrated in the form

    r_t = i r_zz + i |r|^2 r + |r|^2 r_z,

i.e. ``i r_t + r_zz + |r|^2 r - i |r|^2 r_z = 0``, which is the flow whose
zero-curvature representation is the Lax pair used by :mod:`volterra`.

Spatial derivatives use fourth-order central differences with one-sided
closures next to the boundaries; time stepping is classical RK4.  The field
is stored on a coarse output grid (``Nt`` levels) while the solver takes
``substeps`` internal steps per level to respect the explicit stability
bound.  Boundary traces ``s0``, ``s1`` are kept at every internal step since
the t-eigenfunctions need them at fine resolution.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .core import theta_density
from .errors import BlowUp, CornerMismatch, IntegrityError, OutOfDomain, StabilityViolation

SCHEMA_VERSION = "1"
SCHEME = {"space": "central-fd4", "time": "rk4", "order": 4}
# RK4 covers the imaginary axis up to 2.83; the fd4 Laplacian has spectral radius 16/3 dz^-2
STABILITY_C = 0.5
SPONGE_FRACTION = 0.1
SPONGE_STRENGTH = 40.0
BLOWUP_THRESHOLD = 1e3
# stored levels used for interpolation in t (sixth-order Lagrange)
TIME_STENCIL = 6


@dataclasses.dataclass(frozen=True)
class GridSpec:
    Z: float
    T: float
    Nz: int
    Nt: int
    substeps: int | None = None

    def __post_init__(self):
        if self.Z <= 0 or self.T <= 0:
            raise ValueError("Z and T must be positive")
        if self.Nz < 16:
            raise ValueError("Nz must be at least 16")
        if self.Nt < 16 and self.substeps is None:
            # an explicit substep count allows coarse convergence studies
            raise ValueError("Nt must be at least 16")
        if self.substeps is not None and self.substeps < 1:
            raise ValueError("substeps must be >= 1")

    @property
    def dz(self) -> float:
        return self.Z / self.Nz

    @property
    def dt_store(self) -> float:
        return self.T / self.Nt

    @property
    def n_sub(self) -> int:
        if self.substeps is not None:
            return self.substeps
        return max(1, math.ceil(self.dt_store / (0.9 * STABILITY_C * self.dz**2)))

    @property
    def dt(self) -> float:
        return self.dt_store / self.n_sub

    def check_stability(self):
        if self.dt > STABILITY_C * self.dz**2 * (1 + 1e-12):
            raise StabilityViolation(
                f"dt={self.dt:.3e} exceeds {STABILITY_C}*dz^2={STABILITY_C * self.dz**2:.3e}"
            )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class IBData:
    """Initial datum r0, Dirichlet datum s0 and (optional) far-boundary datum.

    ``far`` is the Dirichlet value at z=Z; when it is ``None`` the field is
    pinned to zero there and the sponge layer is active.
    """

    r0: Callable
    s0: Callable
    far: Callable | None = None
    name: str = "custom"
    params: dict = dataclasses.field(default_factory=dict)

    @property
    def sponge(self) -> bool:
        return self.far is None


# ----------------------------------------------------------------- stencils


def _d1(f: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order first derivative along the last axis (one-sided at ends)."""
    out = np.empty_like(f)
    out[..., 2:-2] = (f[..., :-4] - 8 * f[..., 1:-3] + 8 * f[..., 3:-1] - f[..., 4:]) / (12 * h)
    out[..., 0] = (-25 * f[..., 0] + 48 * f[..., 1] - 36 * f[..., 2] + 16 * f[..., 3] - 3 * f[..., 4]) / (12 * h)
    out[..., 1] = (-3 * f[..., 0] - 10 * f[..., 1] + 18 * f[..., 2] - 6 * f[..., 3] + f[..., 4]) / (12 * h)
    out[..., -2] = (3 * f[..., -1] + 10 * f[..., -2] - 18 * f[..., -3] + 6 * f[..., -4] - f[..., -5]) / (12 * h)
    out[..., -1] = (25 * f[..., -1] - 48 * f[..., -2] + 36 * f[..., -3] - 16 * f[..., -4] + 3 * f[..., -5]) / (12 * h)
    return out


def _d2(f: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order second derivative along the last axis (one-sided at ends)."""
    out = np.empty_like(f)
    out[..., 2:-2] = (-f[..., :-4] + 16 * f[..., 1:-3] - 30 * f[..., 2:-2] + 16 * f[..., 3:-1] - f[..., 4:]) / (12 * h * h)
    c0 = (45, -154, 214, -156, 61, -10)
    c1 = (10, -15, -4, 14, -6, 1)
    out[..., 0] = sum(c * f[..., i] for i, c in enumerate(c0)) / (12 * h * h)
    out[..., 1] = sum(c * f[..., i] for i, c in enumerate(c1)) / (12 * h * h)
    out[..., -1] = sum(c * f[..., -1 - i] for i, c in enumerate(c0)) / (12 * h * h)
    out[..., -2] = sum(c * f[..., -1 - i] for i, c in enumerate(c1)) / (12 * h * h)
    return out


def _sponge_profile(z: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Quadratic damping ramp over the outer SPONGE_FRACTION of [lo, hi] (right end)."""
    width = SPONGE_FRACTION * (hi - lo)
    start = hi - width
    g = np.zeros_like(z)
    m = z > start
    g[m] = SPONGE_STRENGTH * ((z[m] - start) / width) ** 2
    return g


def _rhs(r: np.ndarray, h: float, gamma: np.ndarray) -> np.ndarray:
    m2 = (r * r.conj()).real
    return 1j * _d2(r, h) + 1j * m2 * r + m2 * _d1(r, h) - gamma * r


def _ddt(g, t: float, h: float = 2e-3) -> complex:
    """Fourth-order central difference of a scalar boundary datum."""
    return (g(t - 2 * h) - 8 * g(t - h) + 8 * g(t + h) - g(t + 2 * h)) / (12 * h)


def _march(r_init, z, grid: GridSpec, left, right, gamma, on_step=None):
    """RK4 march of the Dirichlet problem; returns the field at each stored level.

    Boundary stage values are produced by running the RK4 stage recursion on
    the local (derivative-free) part of the equation, with a correction that
    makes every stage slope agree with the time derivative of the data.  For
    spatially uniform flow this reproduces the interior stages exactly;
    imposing the data at stage times instead costs temporal order.
    """
    dt = grid.dt
    h = z[1] - z[0]
    state = np.asarray(r_init, dtype=complex).copy()
    state[0] = left(0.0)
    state[-1] = right(0.0)
    out = [state.copy()]
    if on_step is not None:
        on_step(0.0, state)

    def local(y, gam):
        return 1j * abs(y) ** 2 * y - gam * y

    def bstages(g, t0, gam):
        # boundary stages follow the local part of the flow, corrected so
        # that each stage slope matches the derivative of the data
        ts = (t0, t0 + 0.5 * dt, t0 + 0.5 * dt, t0 + dt)
        gs = [g(tt) for tt in ts]
        corr = [_ddt(g, tt) - local(gv, gam) for tt, gv in zip(ts, gs)]
        y1 = gs[0]
        k1 = local(y1, gam) + corr[0]
        y2 = y1 + 0.5 * dt * k1
        k2 = local(y2, gam) + corr[1]
        y3 = y1 + 0.5 * dt * k2
        k3 = local(y3, gam) + corr[2]
        y4 = y1 + dt * k3
        return (y1, y2, y3, y4)

    for n in range(grid.Nt):
        for m in range(grid.n_sub):
            t0 = (n * grid.n_sub + m) * dt
            lb = bstages(left, t0, gamma[0])
            rb = bstages(right, t0, gamma[-1])
            k1 = _rhs(state, h, gamma)
            y = state + 0.5 * dt * k1
            y[0], y[-1] = lb[1], rb[1]
            k2 = _rhs(y, h, gamma)
            y = state + 0.5 * dt * k2
            y[0], y[-1] = lb[2], rb[2]
            k3 = _rhs(y, h, gamma)
            y = state + dt * k3
            y[0], y[-1] = lb[3], rb[3]
            k4 = _rhs(y, h, gamma)
            state = state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            tn = t0 + dt
            state[0] = left(tn)
            state[-1] = right(tn)
            if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > BLOWUP_THRESHOLD:
                raise BlowUp(f"solution norm exceeded {BLOWUP_THRESHOLD} at t={tn:.4g}")
            if on_step is not None:
                on_step(tn, state)
        out.append(state.copy())
    return np.array(out)


# ----------------------------------------------------------------- presets


def _zero(z):
    return np.zeros_like(np.asarray(z, dtype=float), dtype=complex)


def preset(name: str, **params) -> tuple[Callable, IBData | None]:
    """Return ``(profile_on_R, ibdata_or_None)`` for a named preset.

    Localised presets (gaussian, box, sech) return ``None`` for the boundary
    data; their Dirichlet trace comes from a whole-line run (see
    :func:`ibdata_from_preset`).
    """
    if name == "zero":
        return _zero, IBData(_zero, lambda t: 0.0 + 0.0j, None, "zero", {})
    if name == "uniform":
        a = float(params.get("a", 0.5))
        f = lambda t: a * np.exp(1j * a * a * np.asarray(t))
        return (lambda z: a + 0 * np.asarray(z, dtype=complex)), IBData(
            lambda z: a + 0 * np.asarray(z, dtype=complex), f, f, "uniform", {"a": a}
        )
    if name == "gaussian":
        amp = float(params.get("amp", 0.3))
        width = float(params.get("width", 1.0))
        return (lambda z: amp * np.exp(-(np.asarray(z, dtype=float) / width) ** 2) + 0j), None
    if name == "sech":
        amp = float(params.get("amp", 0.3))
        width = float(params.get("width", 1.0))
        return (lambda z: amp / np.cosh(np.asarray(z, dtype=float) / width) + 0j), None
    if name == "box":
        amp = float(params.get("amp", 0.3))
        half = float(params.get("half_width", 1.0))
        edge = float(params.get("edge", 0.25))
        return (
            lambda z: amp * 0.5 * (1 - np.tanh((np.abs(np.asarray(z, dtype=float)) - half) / edge)) + 0j
        ), None
    raise ValueError(f"unknown preset {name!r}")


def whole_line_trace(profile: Callable, grid: GridSpec) -> Callable:
    """Solve on [-Z, Z] and return a cubic interpolant of the trace r(0, t).

    The trace is recorded at every internal step; the interpolant is
    fourth-order accurate at the RK4 half-step times.
    """
    wgrid = dataclasses.replace(grid, Nz=2 * grid.Nz, substeps=grid.n_sub)
    z = np.linspace(-grid.Z, grid.Z, 2 * grid.Nz + 1)
    gamma = _sponge_profile(z, -grid.Z, grid.Z) + _sponge_profile(-z, -grid.Z, grid.Z)
    mid = grid.Nz
    ts, vals = [], []

    def record(t, full):
        ts.append(t)
        vals.append(full[mid])

    _march(profile(z), z, wgrid, lambda t: 0.0, lambda t: 0.0, gamma, on_step=record)
    return CubicSpline(np.array(ts), np.array(vals))


def ibdata_from_preset(name: str, grid: GridSpec, **params) -> IBData:
    profile, data = preset(name, **params)
    if data is not None:
        return data
    trace = whole_line_trace(profile, grid)
    return IBData(profile, lambda t: complex(trace(t)), None, name, dict(params))


def read_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a three-column CSV ``x,re,im`` (one header row) as (x, complex values)."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot read table {path}: {exc}") from None
    if data.shape[1] != 3 or data.shape[0] < 4:
        raise ValueError(f"{path}: expected at least 4 rows of x,re,im")
    x = data[:, 0]
    if np.any(np.diff(x) <= 0):
        raise ValueError(f"{path}: abscissae must be strictly increasing")
    return x, data[:, 1] + 1j * data[:, 2]


def ibdata_from_csv(r0_path, s0_path, grid: GridSpec) -> IBData:
    """Initial and Dirichlet data tabulated in CSV files, cubic-spline interpolated.

    The tables must cover [0, Z] and [0, T] respectively.  Without a
    boundary table the datum is extended evenly to the whole line and the
    trace is taken from a whole-line run, which gives consistent data.
    """
    z, v = read_table(r0_path)
    if z[0] > 0 or z[-1] < grid.Z:
        raise OutOfDomain(f"{r0_path} does not cover [0, {grid.Z}]")
    r0 = CubicSpline(z, v)
    if s0_path is None:
        profile = lambda x: r0(np.abs(np.asarray(x, dtype=float)))
        trace = whole_line_trace(profile, grid)
        return IBData(lambda x: r0(np.asarray(x, dtype=float)), lambda t: complex(trace(t)), None, "csv", {"r0_csv": str(r0_path)})
    t, w = read_table(s0_path)
    if t[0] > 0 or t[-1] < grid.T:
        raise OutOfDomain(f"{s0_path} does not cover [0, {grid.T}]")
    s0 = CubicSpline(t, w)
    return IBData(lambda x: r0(np.asarray(x, dtype=float)), lambda tt: complex(s0(tt)), None, "csv", {"r0_csv": str(r0_path), "s0_csv": str(s0_path)})


# ----------------------------------------------------------------- field


@dataclasses.dataclass(frozen=True, eq=False)
class PotentialField:
    """r, r_z and the cumulative Theta integral on the stored grid.

    ``theta[n, j]`` is the integral of Theta along (0,0) -> (0,t_n) -> (z_j,t_n).
    ``t_fine``/``s0_fine``/``s1_fine``/``theta_t_fine`` are the boundary
    traces at the internal solver resolution.
    """

    grid: GridSpec
    z: np.ndarray
    t: np.ndarray
    r: np.ndarray
    rz: np.ndarray
    theta: np.ndarray
    t_fine: np.ndarray
    s0_fine: np.ndarray
    s1_fine: np.ndarray
    theta_t_fine: np.ndarray
    meta: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        for name in ("z", "t", "r", "rz", "theta", "t_fine", "s0_fine", "s1_fine", "theta_t_fine"):
            getattr(self, name).setflags(write=False)

    # -- interpolation helpers
    def _splines(self):
        cache = self.__dict__.get("_cache")
        if cache is None:
            cache = {
                "s0": CubicSpline(self.t_fine, self.s0_fine),
                "s1": CubicSpline(self.t_fine, self.s1_fine),
                "th0": CubicSpline(self.t_fine, self.theta_t_fine),
            }
            object.__setattr__(self, "_cache", cache)
        return cache

    def boundary(self, t):
        """(s0, s1, theta) at z=0 for arbitrary times (cubic interpolation)."""
        sp = self._splines()
        return sp["s0"](t), sp["s1"](t), sp["th0"](t)

    def _time_weights(self, t: float):
        if t < -1e-12 or t > self.grid.T * (1 + 1e-12):
            raise OutOfDomain(f"t={t} outside [0, {self.grid.T}]")
        dt = self.grid.dt_store
        n = int(round(t / dt))
        if abs(t - n * dt) <= 1e-12 * max(1.0, self.grid.T):
            return np.array([n]), np.array([1.0])
        p = min(TIME_STENCIL, self.grid.Nt + 1)
        i0 = min(max(int(np.floor(t / dt)) - (p // 2 - 1), 0), self.grid.Nt + 1 - p)
        idx = np.arange(i0, i0 + p)
        nodes = self.t[idx]
        w = np.ones(p)
        for a in range(p):
            for b in range(p):
                if a != b:
                    w[a] *= (t - nodes[b]) / (nodes[a] - nodes[b])
        return idx, w

    def profile(self, t: float):
        """r, r_z, theta on the z nodes at time t (Lagrange in t over TIME_STENCIL levels)."""
        idx, w = self._time_weights(t)
        r = np.tensordot(w, self.r[idx], axes=1)
        rz = np.tensordot(w, self.rz[idx], axes=1)
        th = np.tensordot(w, self.theta[idx], axes=1)
        return r, rz, th

    def sample(self, z: float, t: float):
        """Interpolated (r, r_z, theta_cum) at an arbitrary point of the domain."""
        if z < -1e-12 or z > self.grid.Z * (1 + 1e-12):
            raise OutOfDomain(f"z={z} outside [0, {self.grid.Z}]")
        r, rz, th = self.profile(t)
        j = int(round(z / self.grid.dz))
        if abs(z - j * self.grid.dz) <= 1e-12 * max(1.0, self.grid.Z):
            return complex(r[j]), complex(rz[j]), float(th[j])
        return (
            complex(CubicSpline(self.z, r)(z)),
            complex(CubicSpline(self.z, rz)(z)),
            float(CubicSpline(self.z, th)(z)),
        )

    def theta_path_z_first(self):
        """Theta integrated along (0,0) -> (z,0) -> (z,t), on the stored grid."""
        _, th2 = theta_density(self.r, self.rz)
        th0 = self.theta[0]
        out = np.empty_like(self.theta)
        for j in range(len(self.z)):
            out[:, j] = th0[j] + CubicSpline(self.t, th2[:, j]).antiderivative()(self.t)
        return out


def _cumulative(x: np.ndarray, y: np.ndarray, axis: int = -1) -> np.ndarray:
    return CubicSpline(x, y, axis=axis).antiderivative()(x)


def build_field(z, t, r, t_fine, s0_fine, s1_fine, grid: GridSpec, meta: dict) -> PotentialField:
    rz = _d1(r, grid.dz)
    th1, _ = theta_density(r, rz)
    _, th2_0 = theta_density(s0_fine, s1_fine)
    theta_t_fine = _cumulative(t_fine, th2_0)
    theta_t = CubicSpline(t_fine, theta_t_fine)(t)
    theta = theta_t[:, None] + _cumulative(z, th1, axis=1)
    return PotentialField(grid, z, t, r, rz, theta, t_fine, s0_fine, s1_fine, theta_t_fine, meta)


def with_boundary(field: PotentialField, s0_fine=None, s1_fine=None) -> PotentialField:
    """Copy of ``field`` with replaced boundary traces (and the matching t-phase).

    The interior values are kept, so the result is in general inconsistent
    data; this is how the sensitivity of the global relation is probed.
    """
    s0 = field.s0_fine if s0_fine is None else np.asarray(s0_fine, dtype=complex)
    s1 = field.s1_fine if s1_fine is None else np.asarray(s1_fine, dtype=complex)
    _, th2_0 = theta_density(s0, s1)
    meta = dict(field.meta, boundary_modified=True)
    return dataclasses.replace(
        field, s0_fine=s0, s1_fine=s1, theta_t_fine=_cumulative(field.t_fine, th2_0), meta=meta
    )


def solve_ibvp(data: IBData, grid: GridSpec, corner_tol: float = 1e-10) -> PotentialField:
    """March the half-line problem and package the result as a PotentialField.

    The Neumann trace ``s1`` is never an input; it is read off the computed
    field with a one-sided fourth-order difference at z=0.
    """
    grid.check_stability()
    z = np.linspace(0.0, grid.Z, grid.Nz + 1)
    r0 = np.asarray(data.r0(z), dtype=complex)
    if abs(r0[0] - complex(data.s0(0.0))) > corner_tol:
        raise CornerMismatch(f"r0(0)={r0[0]} differs from s0(0)={data.s0(0.0)}")
    if data.sponge and abs(r0[-1]) > 1e-6:
        raise CornerMismatch(f"r0 does not decay at Z (|r0(Z)|={abs(r0[-1]):.2e})")
    if data.sponge:
        gamma = _sponge_profile(z, 0.0, grid.Z)
        right = lambda t: 0.0
    else:
        gamma = np.zeros(grid.Nz + 1)
        right = data.far
    if np.all(r0 == 0) and data.name == "zero":
        # exact zero field, no roundoff injection
        n_f = grid.Nt * grid.n_sub + 1
        zeros = np.zeros((grid.Nt + 1, grid.Nz + 1), dtype=complex)
        t_fine = np.linspace(0.0, grid.T, n_f)
        f0 = np.zeros(n_f, dtype=complex)
        return build_field(z, np.linspace(0, grid.T, grid.Nt + 1), zeros, t_fine, f0, f0.copy(), grid, _meta(data, grid))

    t_fine, s0_f, s1_f = [], [], []

    def record(t, full):
        t_fine.append(t)
        s0_f.append(full[0])
        s1_f.append((-25 * full[0] + 48 * full[1] - 36 * full[2] + 16 * full[3] - 3 * full[4]) / (12 * grid.dz))

    r = _march(r0, z, grid, lambda t: complex(data.s0(t)), right, gamma, on_step=record)
    t = np.linspace(0.0, grid.T, grid.Nt + 1)
    return build_field(z, t, r, np.array(t_fine), np.array(s0_f), np.array(s1_f), grid, _meta(data, grid))


def _meta(data: IBData, grid: GridSpec) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "preset": data.name,
        "params": data.params,
        "grid": grid.to_dict(),
        "dt_internal": grid.dt,
        "substeps": grid.n_sub,
        "scheme": SCHEME,
        "sponge": data.sponge,
    }


def simulate_preset(name: str, grid: GridSpec, **params) -> PotentialField:
    return solve_ibvp(ibdata_from_preset(name, grid, **params), grid)


# ----------------------------------------------------------------- diagnostics


def interior_mask(field: PotentialField) -> np.ndarray:
    """Nodes strictly inside the physical (non-sponge) part of the domain."""
    limit = field.grid.Z * (1 - SPONGE_FRACTION) if field.meta.get("sponge", True) else field.grid.Z
    return (field.z > 0) & (field.z < limit)


def _c4(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Fourth-order centred first difference; drops two points at each end."""
    f = np.moveaxis(f, axis, 0)
    d = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    return np.moveaxis(d, 0, axis)


def conservation_residual(field: PotentialField) -> float:
    """Max-norm of d_t|r|^2 - d_z(|r|^4/2 - 2 Im(conj(r) r_z)).

    Both derivatives use fourth-order centred differences on the stored
    levels; only nodes outside the sponge layer are counted.
    """
    r, rz = field.r, field.rz
    m2 = (r * r.conj()).real
    flux = 0.5 * m2**2 - 2.0 * (r.conj() * rz).imag
    dtm = _c4(m2, field.grid.dt_store, 0)[:, 2:-2]
    dzf = _c4(flux, field.grid.dz, 1)[2:-2, :]
    res = np.abs(dtm - dzf)
    mask = interior_mask(field)[2:-2]
    if res.size == 0 or not mask.any():
        return 0.0
    return float(res[:, mask].max())


# ----------------------------------------------------------------- persistence

FIELD_HEADER = "z,t,re_r,im_r,re_rz,im_rz,theta_cum"
TRACE_HEADER = "t,re_s0,im_s0,re_s1,im_s1"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_csv(path: Path, header: str, cols: list[np.ndarray]):
    data = np.column_stack(cols)
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")


def save_field(field: PotentialField, outdir, extra: dict | None = None) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    Tg, Zg = np.meshgrid(field.t, field.z, indexing="ij")
    _write_csv(
        outdir / "field.csv",
        FIELD_HEADER,
        [Zg.ravel(), Tg.ravel(), field.r.real.ravel(), field.r.imag.ravel(),
         field.rz.real.ravel(), field.rz.imag.ravel(), field.theta.ravel()],
    )
    _write_csv(
        outdir / "trace.csv",
        TRACE_HEADER,
        [field.t_fine, field.s0_fine.real, field.s0_fine.imag, field.s1_fine.real, field.s1_fine.imag],
    )
    manifest = dict(field.meta)
    manifest["files"] = {
        "field.csv": _sha256(outdir / "field.csv"),
        "trace.csv": _sha256(outdir / "trace.csv"),
    }
    if extra:
        manifest.update(extra)
    with open(outdir / "manifest.json", "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return outdir


def load_field(outdir, verify: bool = True) -> PotentialField:
    outdir = Path(outdir)
    manifest = json.loads((outdir / "manifest.json").read_text())
    if verify:
        for name, digest in manifest["files"].items():
            if _sha256(outdir / name) != digest:
                raise IntegrityError(f"{name} does not match manifest hash")
    g = manifest["grid"]
    grid = GridSpec(g["Z"], g["T"], g["Nz"], g["Nt"], g.get("substeps"))
    f = np.loadtxt(outdir / "field.csv", delimiter=",", skiprows=1)
    nt, nz = grid.Nt + 1, grid.Nz + 1
    f = f.reshape(nt, nz, 7)
    tr = np.loadtxt(outdir / "trace.csv", delimiter=",", skiprows=1, ndmin=2)
    meta = {k: v for k, v in manifest.items() if k != "files"}
    return PotentialField(
        grid,
        f[0, :, 0].copy(),
        f[:, 0, 1].copy(),
        f[:, :, 2] + 1j * f[:, :, 3],
        f[:, :, 4] + 1j * f[:, :, 5],
        f[:, :, 6].copy(),
        tr[:, 0].copy(),
        tr[:, 1] + 1j * tr[:, 2],
        tr[:, 3] + 1j * tr[:, 4],
        _cumulative(tr[:, 0], theta_density(tr[:, 1] + 1j * tr[:, 2], tr[:, 3] + 1j * tr[:, 4])[1]),
        meta,
    )
