"""Acceptance criteria at the reference configuration.

Every test appends one ``Criterion N: PASS/FAIL ...`` line that is echoed in
the terminal summary, then asserts at the stated tolerance.  The reference
run is the Gaussian datum 0.3 e^{-z^2} on Z=12, T=1, Nz=768 with Nt chosen by
stability.
"""

import time

import numpy as np
import pytest

from cllfokas import cli
from cllfokas.config import RunConfig, serialize
from cllfokas.errors import WindingAmbiguous
from cllfokas.inverse import reconstruct_field, recover_boundary
from cllfokas.potential import GridSpec, conservation_residual, save_field, simulate_preset, with_boundary
from cllfokas.spectral import (
    RAYS,
    compute_UV,
    compute_uv,
    default_k_grid,
    find_zeros,
    global_relation_residual,
    jump_residuals,
    spectral_data,
    winding_number,
)
from cllfokas.volterra import WHICH, solve_H

from .conftest import ACCEPTANCE_LINES

REF = RunConfig()
JUMP_RHOS = np.linspace(0.1, 3.0, 20)


def record(n: int, ok: bool, detail: str):
    ACCEPTANCE_LINES.append(f"Criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")


@pytest.fixture(scope="module")
def ref():
    return simulate_preset("gaussian", REF.grid, amp=REF.amp, width=REF.width)


@pytest.fixture(scope="module")
def half():
    return simulate_preset("gaussian", GridSpec(REF.Z, REF.T, REF.Nz // 2, REF.Nt), amp=REF.amp, width=REF.width)


def test_criterion_1_direct_solver_order():
    a = 0.5
    start = time.perf_counter()
    errs = []
    for n in (16, 32):
        f = simulate_preset("uniform", GridSpec(12.0, 1.0, n, n, substeps=1), a=a)
        errs.append(np.abs(f.r - a * np.exp(1j * a * a * f.t)[:, None]).max())
    ratio = errs[0] / errs[1]
    elapsed = time.perf_counter() - start
    ok = ratio >= 12 and elapsed < 60
    record(1, ok, f"error ratio under halving {ratio:.2f} (>= 12), {elapsed:.1f} s")
    assert ok


def test_criterion_2_conservation_order():
    grids = [(192, 32), (384, 64), (768, 128)]
    res = [conservation_residual(simulate_preset("gaussian", GridSpec(12.0, 1.0, nz, nt))) for nz, nt in grids]
    orders = [np.log2(res[i] / res[i + 1]) for i in range(len(res) - 1)]
    ok = min(orders) >= 2
    record(2, ok, f"residuals {', '.join(f'{r:.2e}' for r in res)}; observed orders "
           f"{', '.join(f'{o:.2f}' for o in orders)} (>= 2)")
    assert ok


def test_criterion_3_unimodularity(ref):
    rng = np.random.default_rng(REF.seed)
    triples = cli.sample_triples(ref, 20, rng, per_point=10)
    worst = {}
    for which in WHICH:
        worst[which] = max(float(np.max(solve_H(which, ref, z, t, k).det_err)) for z, t, k in triples)
    ok = max(worst.values()) <= 1e-8
    record(3, ok, "max |det H - 1| over 200 triples: "
           + ", ".join(f"{w} {e:.2e}" for w, e in worst.items()) + " (<= 1e-8)")
    assert ok


def test_criterion_4_symmetries(ref):
    ks, _ = default_k_grid(REF.n_per_ray, REF.rho_max)
    sd = spectral_data(ref, ks)
    sm = spectral_data(ref, -ks)
    diffs = {"u": sm.u - sd.u, "v": sm.v + sd.v, "U": sm.U - sd.U, "V": sm.V + sd.V}
    vals = {n: float(np.nanmax(np.abs(d))) for n, d in diffs.items()}
    ok = max(vals.values()) <= 1e-10
    record(4, ok, "parity defects " + ", ".join(f"{n} {v:.1e}" for n, v in vals.items()) + " (<= 1e-10)")
    assert ok


def test_criterion_5_determinant_relations(ref):
    k = np.sort(np.random.default_rng(5).uniform(-4.0, 4.0, 50))
    u, v = compute_uv(ref, k)
    U, V = compute_UV(ref, k)
    # on the real axis conj(k) = k, so the starred conjugates are plain conjugates
    dw = float(np.max(np.abs(u * u.conj() + v * v.conj() - 1)))
    dW = float(np.max(np.abs(U * U.conj() + V * V.conj() - 1)))
    ok = max(dw, dW) <= 1e-6
    record(5, ok, f"det w defect {dw:.2e}, det W defect {dW:.2e} on 50 real k (<= 1e-6)")
    assert ok


@pytest.fixture(scope="module")
def slopes(ref):
    ks = np.geomspace(8.0, 40.0, 12)
    u, v = compute_uv(ref, ks)
    su = np.polyfit(np.log(ks), np.log(np.abs(u - 1)), 1)[0]
    sv = np.polyfit(np.log(ks), np.log(np.abs(v)), 1)[0]
    ok_u, ok_v = -1.2 <= su <= -0.8, -1.2 <= sv <= -0.8
    record(6, ok_u and ok_v, f"log-log slopes on |k| in [8, 40]: |v| {sv:.3f} "
           f"({'in' if ok_v else 'outside'} [-1.2, -0.8]), |u-1| {su:.3f} "
           f"({'in' if ok_u else 'outside'} [-1.2, -0.8]; u is even in k so u-1 = O(1/k^2))")
    return su, sv


def test_criterion_6_v_decay(slopes):
    assert -1.2 <= slopes[1] <= -0.8


@pytest.mark.xfail(strict=True, reason="u is even in k, so |u-1| decays like 1/k^2, not 1/k")
def test_criterion_6_u_decay(slopes):
    assert -1.2 <= slopes[0] <= -0.8


def test_criterion_7_jump_relation(ref, half):
    fine = {name: float(jump_residuals(ref, ang, REF.jump_z, REF.jump_t, JUMP_RHOS).max())
            for name, ang in RAYS.items()}
    coarse = {name: float(jump_residuals(half, ang, REF.jump_z, REF.jump_t, JUMP_RHOS).max())
              for name, ang in RAYS.items()}
    worst, worst_c = max(fine.values()), max(coarse.values())
    ok = worst <= 1e-6 and worst < worst_c
    record(7, ok, f"max |E- - E+ G| at (z,t)=({REF.jump_z}, {REF.jump_t}), 20 points per ray: "
           f"{worst:.2e} at Nz={REF.Nz} (<= 1e-6), {worst_c:.2e} at Nz={REF.Nz // 2}")
    assert ok


def test_criterion_8_global_relation(ref):
    rng = np.random.default_rng(8)
    rho = rng.uniform(0.1, 3.0, 20)
    phi = rng.uniform(np.pi, 1.5 * np.pi, 20)
    k = np.sqrt(rho * np.exp(1j * phi) + 0.5)
    good = np.abs(global_relation_residual(ref, k))
    bad = np.abs(global_relation_residual(ref, k, data=with_boundary(ref, ref.s0_fine + 0.05)))
    factor = float(bad.min() / good.max())
    ok = good.max() <= 1e-4 and factor >= 10
    record(8, ok, f"consistent residual {good.max():.2e} (<= 1e-4); perturbed/consistent "
           f"factor {factor:.2e} (>= 10)")
    assert ok


@pytest.fixture(scope="module")
def boundary(ref):
    return recover_boundary(ref)


def test_criterion_9_reconstruction(ref):
    rec = reconstruct_field(ref)
    ok = rec.sup_rel_err <= 1e-3
    record(9, ok, f"sup relative error {rec.sup_rel_err:.2e} (<= 1e-3), L2 {rec.l2_rel_err:.2e}, "
           "interior 80%, extrapolated")
    assert ok


def test_criterion_10_boundary_recovery(boundary):
    ok = max(boundary.s0_err, boundary.s1_err) <= 1e-3
    record(10, ok, f"sup errors s0 {boundary.s0_err:.2e}, s1 {boundary.s1_err:.2e} (<= 1e-3)")
    assert ok


def test_criterion_11_zero_finder():
    zeta = 0.8 + 0.6j

    def planted(k):
        k = np.asarray(k, dtype=complex)
        return (k**2 - zeta**2) / (k**2 + 1)

    zs = find_zeros(planted, (0.2, 1.5, 0.1, 1.2), tol=1e-12)
    err = min(abs(z - zeta) for z in zs.xi) if zs.xi else np.inf
    rng = np.random.default_rng(11)
    devs, skipped = [], 0
    while len(devs) < 50:
        x0, y0 = rng.uniform(-2, 2, 2)
        w, h = rng.uniform(0.05, 2, 2)
        try:
            n = winding_number(planted, (x0, x0 + w, y0, y0 + h))
        except WindingAmbiguous:
            skipped += 1
            continue
        devs.append(abs(n - round(n)))
    ok = err <= 1e-10 and max(devs) <= 0.1
    record(11, ok, f"planted zero error {err:.1e} (<= 1e-10); max winding deviation from an integer "
           f"{max(devs):.1e} on 50 boxes (<= 0.1, {skipped} ambiguous boxes redrawn)")
    assert ok


def test_criterion_12_determinism(ref, tmp_path_factory):
    tmp = tmp_path_factory.mktemp("determinism")
    field = save_field(ref, tmp / "field")
    cfg = tmp / "cfg.json"
    cfg.write_text(serialize(REF))
    blobs = []
    for i, threads in enumerate(("1", "4")):
        out = tmp / f"run{i}"
        code = cli.main(["spectral", "--config", str(cfg), "--field", str(field), "--out", str(out),
                         "--threads", threads])
        assert code == cli.EXIT_OK
        blobs.append(((out / "spectral.csv").read_bytes(), (out / "zeros.json").read_bytes()))
    ok = blobs[0] == blobs[1]
    record(12, ok, f"two spectral runs (1 and 4 threads) byte-identical: {ok} "
           f"({len(blobs[0][0])} bytes of CSV)")
    assert ok
