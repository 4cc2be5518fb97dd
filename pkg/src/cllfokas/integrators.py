"""Exponential integrators for the column equations of the Lax pair.

Each column of an eigenfunction obeys ``y' = L y + N(s) y`` where ``L`` is
diagonal and constant along the path (the spectral phase) and ``N`` is the
potential-dependent matrix.  The stiff diagonal is treated exactly with a
fourth-order exponential Runge-Kutta method (Krogstad's scheme), so large
``|k|`` costs no extra steps for the phase itself.
"""

from __future__ import annotations

from math import factorial

import numpy as np

from .errors import IntegratorFailure, RegionViolation

# Largest tolerated amplification exp(Re(L) * path length) of a column.
GROWTH_LIMIT = 1e4
_TAYLOR_CUTOFF = 0.5
_TAYLOR_TERMS = 20


def phi_functions(x):
    """Return exp(x), phi1(x), phi2(x), phi3(x) elementwise.

    phi_j(x) = (exp(x) - sum_{m<j} x^m/m!) / x^j.  A truncated Taylor series
    is used for |x| < 0.5 where the closed forms cancel catastrophically.
    """
    x = np.asarray(x, dtype=complex)
    e = np.exp(x)
    small = np.abs(x) < _TAYLOR_CUTOFF
    xs = np.where(small, 1.0, x)
    p1 = (e - 1.0) / xs
    p2 = (e - 1.0 - xs) / xs**2
    p3 = (e - 1.0 - xs - 0.5 * xs**2) / xs**3
    if np.any(small):
        xm = np.where(small, x, 0.0)
        series = []
        for j in (1, 2, 3):
            acc = np.zeros_like(xm)
            for m in reversed(range(_TAYLOR_TERMS)):
                acc = acc * xm + 1.0 / factorial(m + j)
            series.append(acc)
        p1 = np.where(small, series[0], p1)
        p2 = np.where(small, series[1], p2)
        p3 = np.where(small, series[2], p3)
    return e, p1, p2, p3


def check_growth(L: np.ndarray, span: float, limit: float = GROWTH_LIMIT):
    """Raise RegionViolation when exp(Re(L) * span) exceeds ``limit``.

    ``span`` is the signed path length; the test is applied entrywise to the
    diagonal rates ``L``.
    """
    g = np.max(np.real(np.asarray(L) * span), initial=0.0)
    if g > np.log(limit):
        raise RegionViolation(
            f"column amplification exp({g:.3g}) exceeds {limit:g}; spectral point outside its region"
        )
    return g


class _Steps:
    """Krogstad weights per step, cached by step size."""

    def __init__(self, L, h, n: int):
        h = np.broadcast_to(np.asarray(h, dtype=float), (n,))
        self.h = h
        self.L = L
        self.cache = {}

    def __getitem__(self, i):
        h = float(self.h[i])
        w = self.cache.get(h)
        if w is None:
            E, p1, p2, p3 = phi_functions(self.L * h)
            E2, q1, q2, _ = phi_functions(self.L * h / 2)
            w = (h, E, E2, q1, q2, p1, p2, p1 - 3 * p2 + 4 * p3, p2 - 2 * p3, -p2 + 4 * p3)
            self.cache[h] = w
        return w


def graded_nodes(s0: float, s1: float, h_max: float, h_min: float, growth: float = 1.25):
    """Half-step nodes from ``s0`` to ``s1`` with steps growing geometrically.

    Steps start at ``h_min`` and grow by ``growth`` until they reach
    ``h_max``; the remainder of the interval is covered uniformly.  This
    resolves the fast initial layer that forms at the base point of a path.
    Returns ``(nodes, steps)`` with ``len(nodes) == 2*len(steps) + 1`` and
    signed steps.
    """
    span = s1 - s0
    total = abs(span)
    sign = 1.0 if span >= 0 else -1.0
    if total == 0:
        return np.array([s0]), np.zeros(0)
    steps = []
    acc = 0.0
    hs = min(h_min, h_max)
    while hs < h_max and acc + hs < total:
        steps.append(hs)
        acc += hs
        hs *= growth
    rest = total - acc
    if rest > 0:
        m = max(1, int(np.ceil(rest / h_max - 1e-12)))
        steps.extend([rest / m] * m)
    steps = np.array(steps)
    edges = np.concatenate([[0.0], np.cumsum(steps)])
    edges[-1] = total
    mids = 0.5 * (edges[1:] + edges[:-1])
    nodes = np.empty(2 * steps.size + 1)
    nodes[0::2] = edges
    nodes[1::2] = mids
    return s0 + sign * nodes, sign * steps


def _apply(M: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...j->...i", M, y)


def etdrk4(L: np.ndarray, coeff: np.ndarray, y0: np.ndarray, h: float, keep: bool = False):
    """Integrate ``y' = L*y + coeff(s) @ y`` with Krogstad's ETDRK4.

    Parameters
    ----------
    L : (..., 2) array
        Diagonal of the linear part, broadcastable against ``y0``.
    coeff : (2n+1, ..., 2, 2) array
        The matrix ``N`` sampled at the half-step nodes ``s0 + j*h/2``.
    y0 : (..., 2) array
        Initial column.
    h : float or (n,) array
        Signed step, or one step per interval for a non-uniform mesh.
    keep : bool
        If true, also return the solution at every full step, shape
        ``(n+1, ..., 2)``.
    """
    coeff = np.asarray(coeff, dtype=complex)
    if coeff.shape[0] % 2 != 1:
        raise ValueError("coeff must be sampled at an odd number of half-step nodes")
    n = (coeff.shape[0] - 1) // 2
    L = np.asarray(L, dtype=complex)
    steps = _Steps(L, h, n)
    y = np.array(y0, dtype=complex)
    traj = [y.copy()] if keep else None
    for i in range(n):
        h, E, E2, q1, q2, p1, p2, f1, f2, f3 = steps[i]
        Nu = _apply(coeff[2 * i], y)
        a = E2 * y + 0.5 * h * q1 * Nu
        Na = _apply(coeff[2 * i + 1], a)
        b = a + h * q2 * (Na - Nu)
        Nb = _apply(coeff[2 * i + 1], b)
        c = E * y + h * p1 * Nu + 2 * h * p2 * (Nb - Nu)
        Nc = _apply(coeff[2 * i + 2], c)
        y = E * y + h * (f1 * Nu + 2 * f2 * (Na + Nb) + f3 * Nc)
        if keep:
            traj.append(y.copy())
    if not np.all(np.isfinite(y)):
        raise IntegratorFailure("non-finite state in exponential integrator")
    if keep:
        return y, np.array(traj)
    return y


def etdrk4_ratio(l: np.ndarray, coeff: np.ndarray, j: int, h: float, keep: bool = False):
    """Integrate a column through its ratio ``rho = y_o / y_j`` and ``g = log y_j``.

    The column obeys ``y' = diag(L) y + M y`` with ``L[j] = 0`` and
    ``L[o] = l``.  Writing ``y = exp(g) e_j + exp(g) rho e_o`` gives

        rho' = l rho + M_oj + (M_oo - M_jj) rho - M_jo rho^2,
        g'   = M_jj + M_jo rho,

    whose right-hand side has a small Jacobian even when ``M`` carries large
    off-diagonal entries balanced by the phase ``l``.  Starts from
    ``y = e_j``.  Returns the final column, or ``(y, trajectory)``.
    """
    coeff = np.asarray(coeff, dtype=complex)
    n = (coeff.shape[0] - 1) // 2
    o = 1 - j
    Mjj = coeff[..., j, j]
    Moo = coeff[..., o, o]
    Mjo = coeff[..., j, o]
    Moj = coeff[..., o, j]
    l = np.asarray(l, dtype=complex)
    Lv = np.stack(np.broadcast_arrays(l, np.zeros_like(l)), axis=-1)
    steps = _Steps(Lv, h, n)

    def rhs(i, s):
        rho = s[..., 0]
        return np.stack(
            [Moj[i] + (Moo[i] - Mjj[i]) * rho - Mjo[i] * rho * rho, Mjj[i] + Mjo[i] * rho], axis=-1
        )

    s = np.zeros(Lv.shape, dtype=complex)
    traj = [s.copy()] if keep else None
    for i in range(n):
        h, E, E2, q1, q2, p1, p2, f1, f2, f3 = steps[i]
        Nu = rhs(2 * i, s)
        a = E2 * s + 0.5 * h * q1 * Nu
        Na = rhs(2 * i + 1, a)
        b = a + h * q2 * (Na - Nu)
        Nb = rhs(2 * i + 1, b)
        c = E * s + h * p1 * Nu + 2 * h * p2 * (Nb - Nu)
        Nc = rhs(2 * i + 2, c)
        s = E * s + h * (f1 * Nu + 2 * f2 * (Na + Nb) + f3 * Nc)
        if keep:
            traj.append(s.copy())
    if not np.all(np.isfinite(s)):
        raise IntegratorFailure("ratio form broke down (dominant entry of the column vanished)")

    def to_col(st):
        ey = np.exp(st[..., 1])
        y = np.empty(st.shape, dtype=complex)
        y[..., j] = ey
        y[..., o] = ey * st[..., 0]
        return y

    if keep:
        return to_col(s), to_col(np.array(traj))
    return to_col(s)
