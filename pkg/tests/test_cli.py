import json

import pytest

from cllfokas import cli
from cllfokas.config import RunConfig, serialize


def write_config(tmp_path, **kw):
    base = dict(Z=12.0, T=1.0, Nz=64, Nt=16, n_per_ray=16, jump_points=3, det_samples=2,
                global_points=4, out=str(tmp_path / "out"))
    base.update(kw)
    path = tmp_path / "cfg.json"
    path.write_text(serialize(RunConfig(**base)))
    return str(path)


@pytest.fixture(scope="module")
def zero_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("zero")
    cfg = write_config(tmp, preset="zero")
    assert cli.main(["simulate", "--config", cfg]) == cli.EXIT_OK
    return tmp, cfg


@pytest.fixture(scope="module")
def gauss_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("gauss")
    cfg = write_config(tmp, preset="gaussian")
    assert cli.main(["simulate", "--config", cfg]) == cli.EXIT_OK
    return tmp, cfg


def test_simulate_manifest(zero_run):
    tmp, _ = zero_run
    manifest = json.loads((tmp / "out" / "field" / "manifest.json").read_text())
    assert manifest["preset"] == "zero"
    assert manifest["config"]["Nz"] == 64


def test_missing_output_parent(tmp_path):
    cfg = write_config(tmp_path, preset="zero", out=str(tmp_path / "a" / "b"))
    assert cli.main(["simulate", "--config", cfg]) == cli.EXIT_CONFIG


def test_bad_config_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"Nz": "many"}')
    assert cli.main(["simulate", "--config", str(path)]) == cli.EXIT_CONFIG


def test_command_without_field(tmp_path):
    cfg = write_config(tmp_path, preset="zero")
    assert cli.main(["verify", "--config", cfg]) == cli.EXIT_CONFIG


def test_corrupted_field(tmp_path):
    cfg = write_config(tmp_path, preset="zero")
    assert cli.main(["simulate", "--config", cfg]) == cli.EXIT_OK
    trace = tmp_path / "out" / "field" / "trace.csv"
    trace.write_text(trace.read_text().replace("0,", "1,", 1))
    assert cli.main(["spectral", "--config", cfg]) == cli.EXIT_INTEGRITY


def test_verify_zero_field(zero_run, capsys):
    tmp, cfg = zero_run
    assert cli.main(["verify", "--config", cfg]) == cli.EXIT_OK
    report = json.loads((tmp / "out" / "verify.json").read_text())
    assert report["all_pass"] and report["field"] == "zero"
    assert all(c["measured"] == 0.0 for c in report["checks"])
    assert "PASS det_H1" in capsys.readouterr().out


def test_verify_failure_exit_code(zero_run, tmp_path):
    # an impossible tolerance on a nonzero quantity must fail
    _, cfg = zero_run
    doc = json.loads(open(cfg).read())
    doc.update(preset="gaussian", tol_conservation=1e-30, out=str(tmp_path / "o"))
    path = tmp_path / "strict.json"
    path.write_text(json.dumps(doc))
    assert cli.main(["simulate", "--config", str(path)]) == cli.EXIT_OK
    assert cli.main(["verify", "--config", str(path)]) == cli.EXIT_VERIFY


def test_inadmissible_ladder(zero_run, tmp_path):
    tmp, _ = zero_run
    cfg = write_config(tmp_path, preset="zero", ladder=(8.0, 12.0, 18.0))
    field = str(tmp / "out" / "field")
    assert cli.main(["reconstruct", "--config", cfg, "--field", field]) == cli.EXIT_LADDER


def test_small_ladder_warns(gauss_run, tmp_path, capsys):
    tmp, _ = gauss_run
    cfg = write_config(tmp_path, ladder=(1.0, 1.5, 2.0, 3.0, 4.0), extrapolate=False)
    field = str(tmp / "out" / "field")
    assert cli.main(["reconstruct", "--config", cfg, "--field", field]) == cli.EXIT_OK
    assert "warning" in capsys.readouterr().err
    report = json.loads((tmp_path / "out" / "reconstruct.json").read_text())
    assert report["warnings"]


def test_reconstruct_outputs(gauss_run):
    tmp, cfg = gauss_run
    assert cli.main(["reconstruct", "--config", cfg]) == cli.EXIT_OK
    report = json.loads((tmp / "out" / "reconstruct.json").read_text())
    assert report["sup_rel_err"] < 1e-2
    assert (tmp / "out" / "reconstruction.csv").exists()
    assert (tmp / "out" / "boundary.csv").read_text().startswith("t,re_s0")


def test_spectral_deterministic_across_threads(gauss_run, tmp_path):
    tmp, cfg = gauss_run
    field = str(tmp / "out" / "field")
    outs = []
    for threads in ("1", "3"):
        out = tmp_path / f"t{threads}"
        assert cli.main(["spectral", "--config", cfg, "--field", field, "--threads", threads,
                         "--out", str(out)]) == cli.EXIT_OK
        outs.append(((out / "spectral.csv").read_bytes(), (out / "zeros.json").read_bytes()))
    assert outs[0] == outs[1]


def test_jump_csv(gauss_run):
    tmp, cfg = gauss_run
    assert cli.main(["jump", "--config", cfg]) == cli.EXIT_OK
    lines = (tmp / "out" / "jump.csv").read_text().splitlines()
    assert lines[0] == "ray,rho,re_k,im_k,mismatch"
    assert len(lines) == 1 + 4 * 3


def test_seed_override(zero_run, tmp_path):
    _, cfg = zero_run
    args = cli.build_parser().parse_args(["verify", "--config", cfg, "--seed", "7", "--out", str(tmp_path)])
    c = cli._config_from(args)
    assert c.seed == 7 and c.out == str(tmp_path)
