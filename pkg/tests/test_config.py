import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cllfokas.config import PRESETS, RunConfig, check_output_dir, from_dict, load, parse, serialize, to_dict
from cllfokas.errors import ConfigError

pos = st.floats(1e-6, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def configs(draw):
    T = draw(st.floats(0.1, 5))
    Z = draw(st.floats(1, 50))
    preset = draw(st.sampled_from([p for p in PRESETS if p != "csv"]))
    return RunConfig(
        preset=preset,
        amp=draw(st.floats(-2, 2)),
        width=draw(pos),
        Z=Z,
        T=T,
        Nz=draw(st.integers(16, 4096)),
        Nt=draw(st.integers(16, 512)),
        substeps=draw(st.none() | st.integers(1, 8)),
        ladder=tuple(draw(st.lists(pos, min_size=1, max_size=7))),
        richardson_ratio=draw(st.floats(1.01, 4)),
        extrapolate=draw(st.booleans()),
        tol_det=draw(pos),
        beta_sign=draw(st.sampled_from([1.0, -1.0])),
        jump_z=draw(st.floats(0, 1)) * Z,
        jump_t=draw(st.floats(0, 1)) * T,
        seed=draw(st.integers(0, 2**64 - 1)),
        threads=draw(st.integers(1, 16)),
        out=draw(st.text(min_size=1, max_size=20)),
    )


@settings(max_examples=200)
@given(configs())
def test_round_trip(c):
    assert parse(serialize(c)) == c


def test_defaults_round_trip():
    c = RunConfig()
    assert parse(serialize(c)) == c
    assert parse("{}") == c
    assert set(to_dict(c)) == set(json.loads(serialize(c)))


def test_int_accepted_for_float():
    c = from_dict({"Z": 10, "amp": 1})
    assert isinstance(c.Z, float) and c.Z == 10.0


@pytest.mark.parametrize(
    "doc",
    [
        {"Nzz": 10},
        {"preset": "triangle"},
        {"preset": "csv"},
        {"Nz": 10.5},
        {"Nz": True},
        {"amp": "big"},
        {"amp": None},
        {"extrapolate": 1},
        {"tol_det": 0.0},
        {"tol_jump": -1e-6},
        {"xi_box": [1.0, 0.0, -1.0, 0.0]},
        {"mu_box": [0.0, 1.0, 0.0]},
        {"ladder": [8, -12, 18, 27, 40]},
        {"ladder": ["a"]},
        {"seed": -1},
        {"seed": 2**64},
        {"threads": 0},
        {"richardson_ratio": 1.0},
        {"beta_sign": 0.5},
        {"jump_t": 2.0},
        {"Nz": 4},
        {"T": -1.0},
    ],
)
def test_invalid_rejected(doc):
    with pytest.raises(ConfigError):
        from_dict(doc)


def test_non_finite_rejected():
    with pytest.raises(ConfigError):
        parse('{"amp": NaN}')
    with pytest.raises(ConfigError):
        parse('{"Z": Infinity}')
    with pytest.raises(ConfigError):
        RunConfig(rho_max=float("nan"))


def test_bad_json_and_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse("{not json")
    with pytest.raises(ConfigError):
        parse("[1, 2]")
    with pytest.raises(ConfigError):
        load(tmp_path / "missing.json")


def test_output_dir_checks(tmp_path):
    assert check_output_dir(tmp_path / "new") == tmp_path / "new"
    with pytest.raises(ConfigError):
        check_output_dir(tmp_path / "no" / "such" / "dir")
    f = tmp_path / "file"
    f.write_text("x")
    with pytest.raises(ConfigError):
        check_output_dir(f)
