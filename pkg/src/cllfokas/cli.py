"""Command-line front end: ``cllfokas <command> [options]``.

Commands
--------
simulate     solve the initial-boundary value problem, write ``<out>/field``
spectral     u, v, U, V, beta and the global-relation residual on the ray grids
zeros        zeros of u and beta with their residue data
jump         jump mismatch of the sectional function on each ray
verify       run the invariant checks and write a JSON report
reconstruct  round-trip r(z, t) and the boundary values from the eigenfunctions

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 integrity
(hash) mismatch, 5 failed invariant, 6 inadmissible ladder.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import RunConfig
from .core import lam_of
from .errors import CLLError, ConfigError, IntegrityError, LadderInadmissible
from .inverse import recover_boundary, reconstruct_field, write_boundary_csv, write_reconstruction_csv
from .potential import (
    conservation_residual,
    ibdata_from_csv,
    ibdata_from_preset,
    load_field,
    save_field,
    solve_ibvp,
)
from .spectral import (
    RAYS,
    ZeroSet,
    compute_uv,
    compute_UV,
    default_k_grid,
    find_zeros,
    global_relation_residual,
    jump_residuals,
    residue_coefficients,
    spectral_data,
    write_spectral_csv,
    write_zeros_json,
)
from .volterra import WHICH, solve_H

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INTEGRITY = 4
EXIT_VERIFY = 5
EXIT_LADDER = 6

# k-sweeps are split into chunks of this fixed size so that the emitted
# numbers do not depend on the thread count
CHUNK = 64
JUMP_RHO = (0.1, 3.0)
GLOBAL_RHO = (0.1, 3.0)
K_PER_POINT = 10


class VerifyFailed(CLLError):
    pass


# ------------------------------------------------------------------ helpers


def _finite_or_none(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def _chunked(fn, ks: np.ndarray, threads: int):
    """Apply ``fn`` to fixed-size chunks of ``ks``; results land in preallocated slots."""
    n = ks.size
    starts = list(range(0, n, CHUNK))
    results = [None] * len(starts)

    def work(i):
        s = starts[i]
        results[i] = fn(ks[s : s + CHUNK])

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(len(starts))))
    else:
        for i in range(len(starts)):
            work(i)
    return results


def _spectral_on(field, ks, threads):
    parts = _chunked(lambda kk: spectral_data(field, kk), ks, threads)
    cat = lambda name: np.concatenate([getattr(p, name) for p in parts])
    return type(parts[0])(ks, cat("u"), cat("v"), cat("U"), cat("V"), field.grid.T)


def _field_dir(cfg: RunConfig, field: str | None) -> Path:
    return Path(field) if field else Path(cfg.out) / "field"


def _load(cfg: RunConfig, field: str | None):
    path = _field_dir(cfg, field)
    if not (path / "manifest.json").exists():
        raise ConfigError(f"no field artifacts in {path}; run 'simulate' first")
    return load_field(path)


def _out(cfg: RunConfig) -> Path:
    p = cfgmod.check_output_dir(cfg.out)
    p.mkdir(exist_ok=True)
    return p


# ----------------------------------------------------------------- commands


def cmd_simulate(cfg: RunConfig) -> Path:
    out = _out(cfg)
    grid = cfg.grid
    if cfg.preset == "csv":
        data = ibdata_from_csv(cfg.r0_csv, cfg.s0_csv, grid)
    else:
        data = ibdata_from_preset(cfg.preset, grid, **cfg.preset_params)
    field = solve_ibvp(data, grid)
    return save_field(field, out / "field", extra={"config": cfgmod.to_dict(cfg)})


def _beta(cfg, sd, sdc):
    return sd.u * np.conj(sdc.U) + cfg.beta_sign * sd.v * np.conj(sdc.V)


def _in_closed_D2(ks) -> np.ndarray:
    lam = lam_of(ks)
    tol = 1e-12 * np.maximum(1.0, np.abs(lam))
    return (lam.real <= tol) & (lam.imag <= tol)


def cmd_spectral(cfg: RunConfig, field: str | None = None) -> tuple[Path, Path]:
    """spectral.csv on the four ray grids plus zeros.json; prints a parity summary line."""
    out = _out(cfg)
    f = _load(cfg, field)
    ks, _ = default_k_grid(cfg.n_per_ray, cfg.rho_max)
    sd = _spectral_on(f, ks, cfg.threads)
    sdc = _spectral_on(f, np.conj(ks), cfg.threads)
    beta = _beta(cfg, sd, sdc)
    gr = np.full(ks.size, np.nan)
    m = _in_closed_D2(ks)
    if m.any():
        parts = _chunked(lambda kk: np.abs(global_relation_residual(f, kk)), ks[m], cfg.threads)
        gr[m] = np.concatenate(parts)
    csv = write_spectral_csv(out / "spectral.csv", sd, beta, gr)
    sm = _spectral_on(f, -ks, cfg.threads)
    parity = _parity(sd, sm)
    print(f"parity max|u(-k)-u(k)|,|v(-k)+v(k)|,|U(-k)-U(k)|,|V(-k)+V(k)| = {parity:.3e}")
    js = cmd_zeros(cfg, field, f)
    return csv, js


def _parity(sd, sm) -> float:
    diffs = [sm.u - sd.u, sm.v + sd.v, sm.U - sd.U, sm.V + sd.V]
    vals = [np.nanmax(np.abs(d)) if np.isfinite(d).any() else 0.0 for d in diffs]
    return float(max(vals))


def cmd_zeros(cfg: RunConfig, field: str | None = None, f=None) -> Path:
    """Zeros of u in ``xi_box`` and of beta in ``mu_box``, completed to +- pairs."""
    out = _out(cfg)
    f = _load(cfg, field) if f is None else f
    uf = lambda kk: compute_uv(f, kk)[0]

    def betaf(kk):
        u, v = compute_uv(f, kk)
        U, V = compute_UV(f, np.conj(kk))
        return u * np.conj(U) + cfg.beta_sign * v * np.conj(V)

    xi = find_zeros(uf, cfg.xi_box, "xi", tol=cfg.tol_zero)
    mu = find_zeros(betaf, cfg.mu_box, "mu", tol=cfg.tol_zero)
    zs = ZeroSet(xi=xi.xi, mu=mu.mu, residuals={**xi.residuals, **mu.residuals}, windings=xi.windings + mu.windings)
    residues = residue_coefficients(f, zs, cfg.beta_sign)
    return write_zeros_json(out / "zeros.json", zs, residues)


JUMP_HEADER = "ray,rho,re_k,im_k,mismatch"


def _jump_table(cfg: RunConfig, f):
    rhos = np.linspace(*JUMP_RHO, cfg.jump_points)
    rows = []
    for ang in RAYS.values():
        res = jump_residuals(f, ang, cfg.jump_z, cfg.jump_t, rhos, cfg.beta_sign)
        for rho, e in zip(rhos, res):
            k = np.sqrt(rho * np.exp(1j * ang) + 0.5)
            rows.append((ang, rho, k, e))
    return rows


def cmd_jump(cfg: RunConfig, field: str | None = None) -> Path:
    out = _out(cfg)
    f = _load(cfg, field)
    lines = [JUMP_HEADER]
    for ang, rho, k, e in _jump_table(cfg, f):
        lines.append(",".join(repr(float(x)) for x in (ang, rho, k.real, k.imag, e)))
    path = out / "jump.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


# ------------------------------------------------------------------ verify


def sample_triples(field, n_points: int, rng: np.random.Generator, per_point: int = K_PER_POINT):
    """Random (z, t, k-batch) triples where both columns of every H_j stay bounded.

    lam = k^2 - 1/2 is drawn near the real axis so that the exponential
    factors of both columns remain below the growth limit on every leg.
    """
    g = field.grid
    out = []
    for _ in range(n_points):
        z = float(rng.uniform(0.0, g.Z))
        t = float(rng.uniform(0.0, g.T))
        lam = rng.uniform(-3.0, 3.0, per_point) + 1j * rng.uniform(-0.25, 0.25, per_point)
        sign = np.where(rng.random(per_point) < 0.5, 1.0, -1.0)
        out.append((z, t, sign * np.sqrt(lam + 0.5)))
    return out


def _entry(name, measured, threshold, ok=None):
    measured = float(measured)
    ok = (measured <= threshold) if ok is None else ok
    return {"name": name, "measured": _finite_or_none(measured), "threshold": threshold, "pass": bool(ok)}


def verify_report(cfg: RunConfig, f) -> dict:
    rng = np.random.default_rng(cfg.seed)
    checks = []
    triples = sample_triples(f, cfg.det_samples, rng)
    for which in WHICH:
        err = max(float(np.max(solve_H(which, f, z, t, k).det_err)) for z, t, k in triples)
        checks.append(_entry(f"det_{which}", err, cfg.tol_det))

    ks, _ = default_k_grid(max(cfg.n_per_ray // 4, 8), cfg.rho_max)
    sd = _spectral_on(f, ks, cfg.threads)
    sm = _spectral_on(f, -ks, cfg.threads)
    checks.append(_entry("parity_uvUV", _parity(sd, sm), cfg.tol_symmetry))

    kr = np.sort(rng.uniform(-4.0, 4.0, 50))
    sr = _spectral_on(f, kr, cfg.threads)
    sc = _spectral_on(f, np.conj(kr), cfg.threads)
    det_w = np.abs(sr.u * np.conj(sc.u) + sr.v * np.conj(sc.v) - 1.0)
    det_W = np.abs(sr.U * np.conj(sc.U) + sr.V * np.conj(sc.V) - 1.0)
    checks.append(_entry("det_w_real_axis", np.max(det_w), 1e-6))
    checks.append(_entry("det_W_real_axis", np.max(det_W), 1e-6))

    jumps = [e for *_, e in _jump_table(cfg, f)]
    checks.append(_entry("jump_mismatch", max(jumps), cfg.tol_jump))

    rho = rng.uniform(*GLOBAL_RHO, cfg.global_points)
    phi = rng.uniform(np.pi, 1.5 * np.pi, cfg.global_points)
    kg = np.sqrt(rho * np.exp(1j * phi) + 0.5)
    gr = np.abs(global_relation_residual(f, kg))
    checks.append(_entry("global_relation", np.max(gr), cfg.tol_global))

    checks.append(_entry("conservation_law", conservation_residual(f), cfg.tol_conservation))
    return {
        "field": f.meta.get("preset"),
        "seed": cfg.seed,
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks),
    }


def cmd_verify(cfg: RunConfig, field: str | None = None) -> dict:
    out = _out(cfg)
    f = _load(cfg, field)
    report = verify_report(cfg, f)
    _write_json(out / "verify.json", report)
    for c in report["checks"]:
        state = "PASS" if c["pass"] else "FAIL"
        print(f"{state} {c['name']}: {c['measured']} (threshold {c['threshold']})")
    if not report["all_pass"]:
        raise VerifyFailed("one or more invariants failed; see verify.json")
    return report


# ------------------------------------------------------------- reconstruct


def cmd_reconstruct(cfg: RunConfig, field: str | None = None) -> dict:
    out = _out(cfg)
    f = _load(cfg, field)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rec = reconstruct_field(f, cfg.ladder, cfg.richardson_ratio, extrapolate=cfg.extrapolate)
        br = recover_boundary(f, cfg.ladder, cfg.richardson_ratio, extrapolate=cfg.extrapolate)
    msgs = [str(w.message) for w in caught]
    for m in dict.fromkeys(msgs):
        print(f"warning: {m}", file=sys.stderr)
    write_reconstruction_csv(out / "reconstruction.csv", rec)
    write_boundary_csv(out / "boundary.csv", br)
    report = {
        "ladder": list(rec.mags),
        "extrapolated": cfg.extrapolate,
        "sup_rel_err": _finite_or_none(rec.sup_rel_err),
        "l2_rel_err": _finite_or_none(rec.l2_rel_err),
        "s0_sup_err": _finite_or_none(br.s0_err),
        "s1_sup_err": _finite_or_none(br.s1_err),
        "within_tol_recon": bool(rec.sup_rel_err <= cfg.tol_recon),
        "within_tol_boundary": bool(max(br.s0_err, br.s1_err) <= cfg.tol_boundary),
        "warnings": list(dict.fromkeys(msgs)),
    }
    _write_json(out / "reconstruct.json", report)
    print(f"reconstruction sup rel err {rec.sup_rel_err:.3e}, L2 rel err {rec.l2_rel_err:.3e}")
    print(f"boundary sup err s0 {br.s0_err:.3e}, s1 {br.s1_err:.3e}")
    return report


# ---------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON configuration file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads for k-sweeps")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for sampled checks")
    p = argparse.ArgumentParser(prog="cllfokas", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="solve the IBVP and store the field")
    for name, text in (
        ("spectral", "spectral functions on the ray grids"),
        ("zeros", "zeros of u and beta and residue data"),
        ("jump", "jump mismatch of E on each ray"),
        ("verify", "invariant checks with a JSON report"),
        ("reconstruct", "round-trip reconstruction of the field and boundary values"),
    ):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("--field", default=None, help="field directory (default <out>/field)")
    return p


def _config_from(args) -> RunConfig:
    cfg = cfgmod.load(args.config) if getattr(args, "config", None) else RunConfig()
    changes = {k: getattr(args, k) for k in ("out", "threads", "seed") if hasattr(args, k)}
    if changes:
        try:
            cfg = cfg.replace(**changes)
        except TypeError as exc:  # pragma: no cover
            raise ConfigError(str(exc)) from None
    return cfg


COMMANDS = {
    "simulate": lambda cfg, a: cmd_simulate(cfg),
    "spectral": lambda cfg, a: cmd_spectral(cfg, a.field),
    "zeros": lambda cfg, a: cmd_zeros(cfg, a.field),
    "jump": lambda cfg, a: cmd_jump(cfg, a.field),
    "verify": lambda cfg, a: cmd_verify(cfg, a.field),
    "reconstruct": lambda cfg, a: cmd_reconstruct(cfg, a.field),
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from(args)
        COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except VerifyFailed as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VERIFY
    except LadderInadmissible as exc:
        print(f"ladder error: {exc}", file=sys.stderr)
        return EXIT_LADDER
    except (CLLError, ValueError, FloatingPointError) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
