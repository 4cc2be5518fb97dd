"""Run configuration for the command-line front end.

A configuration is a flat JSON object.  Every key is optional and falls back
to the default below; unknown keys are rejected so that typos do not pass
silently.  ``parse(serialize(c)) == c`` holds for every valid configuration
because floats are written with ``repr`` (shortest exact round-trip form).
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from pathlib import Path

from .errors import ConfigError
from .potential import GridSpec
from .volterra import LADDER_MAGNITUDES

PRESETS = ("zero", "uniform", "gaussian", "sech", "box", "csv")
_PRESET_PARAMS = {
    "zero": (),
    "uniform": ("a",),
    "gaussian": ("amp", "width"),
    "sech": ("amp", "width"),
    "box": ("amp", "half_width", "edge"),
    "csv": (),
}
_TOLERANCES = ("tol_det", "tol_symmetry", "tol_jump", "tol_global", "tol_conservation", "tol_zero", "tol_recon", "tol_boundary")


@dataclasses.dataclass(frozen=True)
class RunConfig:
    preset: str = "gaussian"
    amp: float = 0.3
    width: float = 1.0
    a: float = 0.5
    half_width: float = 1.0
    edge: float = 0.25
    r0_csv: str | None = None
    s0_csv: str | None = None
    Z: float = 12.0
    T: float = 1.0
    Nz: int = 768
    Nt: int = 64
    substeps: int | None = None
    ladder: tuple = LADDER_MAGNITUDES
    richardson_ratio: float = 2.0
    extrapolate: bool = True
    n_per_ray: int = 256
    rho_max: float = 16.0
    xi_box: tuple = (0.05, 1.5, -1.5, -0.05)
    mu_box: tuple = (0.9, 2.0, -0.6, -0.05)
    jump_z: float = 0.7
    jump_t: float = 0.4
    jump_points: int = 20
    det_samples: int = 20
    global_points: int = 20
    beta_sign: float = 1.0
    tol_det: float = 1e-8
    tol_symmetry: float = 1e-10
    tol_jump: float = 1e-6
    tol_global: float = 1e-4
    tol_conservation: float = 1e-4
    tol_zero: float = 1e-10
    tol_recon: float = 1e-3
    tol_boundary: float = 1e-3
    seed: int = 0
    threads: int = 1
    out: str = "out"

    def __post_init__(self):
        validate(self)

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.Z, self.T, self.Nz, self.Nt, self.substeps)

    @property
    def preset_params(self) -> dict:
        return {name: getattr(self, name) for name in _PRESET_PARAMS[self.preset]}

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _fields():
    return {f.name: f for f in dataclasses.fields(RunConfig)}


def _check_box(name, box):
    if len(box) != 4 or not (box[0] < box[1] and box[2] < box[3]):
        raise ConfigError(f"{name} must be (re_lo, re_hi, im_lo, im_hi) with lo < hi")


def validate(c: RunConfig):
    for f in dataclasses.fields(c):
        v = getattr(c, f.name)
        vals = v if isinstance(v, tuple) else (v,)
        if any(isinstance(x, float) and not math.isfinite(x) for x in vals):
            raise ConfigError(f"{f.name} must be finite")
    if c.preset not in PRESETS:
        raise ConfigError(f"unknown preset {c.preset!r}; expected one of {', '.join(PRESETS)}")
    if c.preset == "csv" and not c.r0_csv:
        raise ConfigError("preset 'csv' needs r0_csv (and s0_csv unless the datum decays)")
    try:
        GridSpec(c.Z, c.T, c.Nz, c.Nt, c.substeps)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for name in _TOLERANCES:
        if not getattr(c, name) > 0:
            raise ConfigError(f"{name} must be positive")
    # the shape of the ladder (length, ordering) is checked where it is used,
    # so that an inadmissible ladder is reported as such rather than as a
    # malformed configuration
    if not c.ladder or any(m <= 0 for m in c.ladder):
        raise ConfigError("ladder magnitudes must be positive")
    if c.richardson_ratio <= 1:
        raise ConfigError("richardson_ratio must exceed 1")
    if c.beta_sign not in (1.0, -1.0):
        raise ConfigError("beta_sign must be +1 or -1")
    _check_box("xi_box", c.xi_box)
    _check_box("mu_box", c.mu_box)
    for name in ("n_per_ray", "jump_points", "det_samples", "global_points", "threads"):
        if getattr(c, name) < 1:
            raise ConfigError(f"{name} must be at least 1")
    if c.rho_max <= 0:
        raise ConfigError("rho_max must be positive")
    if not 0 <= c.seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if not (0 <= c.jump_t <= c.T and 0 <= c.jump_z <= c.Z):
        raise ConfigError("jump point (jump_z, jump_t) must lie in the domain")


def _coerce(name: str, value, kind):
    """Type-check one JSON value against the annotation of field ``name``."""
    kind = str(kind)
    if value is None:
        if "None" in kind:
            return None
        raise ConfigError(f"{name} may not be null")
    if kind.startswith("tuple"):
        if not isinstance(value, (list, tuple)) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
        ):
            raise ConfigError(f"{name} must be a list of numbers")
        return tuple(float(x) for x in value)
    if kind.startswith("bool"):
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false")
        return value
    if kind.startswith("int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer")
        return value
    if kind.startswith("float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number")
        return float(value)
    if kind.startswith("str"):
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string")
        return value
    raise ConfigError(f"cannot interpret {name}")  # pragma: no cover


def from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    fields = _fields()
    unknown = sorted(set(doc) - set(fields))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    kw = {name: _coerce(name, value, fields[name].type) for name, value in doc.items()}
    return RunConfig(**kw)


def to_dict(c: RunConfig) -> dict:
    out = {}
    for name in _fields():
        v = getattr(c, name)
        out[name] = list(v) if isinstance(v, tuple) else v
    return out


def parse(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration is not valid JSON: {exc}") from None
    return from_dict(doc)


def serialize(c: RunConfig) -> str:
    return json.dumps(to_dict(c), indent=2, sort_keys=True) + "\n"


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None
    return parse(text)


def check_output_dir(path) -> Path:
    """The output directory must exist (or be creatable) and be writable."""
    p = Path(path)
    if p.exists() and not p.is_dir():
        raise ConfigError(f"output path {p} is not a directory")
    parent = p if p.exists() else p.parent
    if not parent.exists():
        raise ConfigError(f"parent of output directory {p} does not exist")
    if not os.access(parent, os.W_OK):
        raise ConfigError(f"output directory {p} is not writable")
    return p
