import json

import pytest

from opfield.cli import main, run
from opfield.config import COMMANDS, load_config, parse_override
from opfield.errors import ConfigError


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


# -- config -----------------------------------------------------------------------------

def test_minimal_config_fills_defaults(tmp_path):
    cfg = load_config(write(tmp_path, "seed = 3\n"), "solve-sourced")
    assert (cfg.d, cfg.n, cfg.m, cfg.R) == (2, 6, 1.0, 1.0)
    assert cfg.echo()["seed"] == 3
    assert load_config(write(tmp_path, "seed = 3\n"), "qcd-residual").d == 4


def test_seed_mandatory(tmp_path):
    with pytest.raises(ConfigError, match="seed"):
        load_config(write(tmp_path, "m = 1.0\n"), "certify")


def test_negative_mass_names_field(tmp_path):
    with pytest.raises(ConfigError, match=r"\bm\b"):
        load_config(write(tmp_path, "seed = 1\nm = -1.0\n"), "certify")


def test_duplicate_key(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "seed = 1\nm = 1.0\nm = 2.0\n"), "certify")


def test_unknown_key(tmp_path):
    with pytest.raises(ConfigError, match="mass"):
        load_config(write(tmp_path, "seed = 1\nmass = 1.0\n"), "certify")


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml", "certify")


def test_command_conflict(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, 'seed = 1\ncommand = "wightman"\n'), "certify")


def test_qcd_requires_d4():
    with pytest.raises(ConfigError):
        load_config(None, "qcd-residual", ["seed=1", "d=2"])


def test_overrides():
    assert parse_override("coeffs=[0.01, 0.002]") == ("coeffs", [0.01, 0.002])
    assert parse_override("signature=minkowski") == ("signature", "minkowski")
    assert parse_override('signature="minkowski"') == ("signature", "minkowski")
    assert parse_override("n=4") == ("n", 4)
    with pytest.raises(ConfigError):
        parse_override("n")
    cfg = load_config(None, "wightman", ["seed=2", "n=8", "points=3"])
    assert (cfg.n, cfg.points) == (8, 3)


# -- runs -------------------------------------------------------------------------------

def run_cli(tmp_path, command, *sets, config_text="seed = 11\n", name="out"):
    cfg = write(tmp_path, config_text, f"{name}.toml")
    out = tmp_path / name
    args = [command, "--config", str(cfg), "--out", str(out)]
    for s in sets:
        args += ["--set", s]
    code = main(args)
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    return code, out, report


def test_certify_pass(tmp_path):
    code, _, report = run_cli(tmp_path, "certify", "coeffs=[0.0111]", "m=1.0", "R=1.0")
    assert code == 0
    assert report["certificate"]["status"] == "PASS"
    assert report["config"]["coeffs"] == [0.0111]


def test_certify_fail_exit_2(tmp_path):
    code, _, report = run_cli(tmp_path, "certify", "coeffs=[0.02]")
    assert code == 2 and report["certificate"]["status"] == "FAIL"


def test_solve_sourced_outputs(tmp_path):
    code, out, report = run_cli(tmp_path, "solve-sourced", "n=4")
    assert code == 0
    assert {"convergence.csv", "solution.op", "source.op"} <= set(report["files"])
    assert report["certificate"]["converged"]
    assert "total_seconds" in report["timings"]


def test_solve_phi3_zero_seed(tmp_path):
    code, _, report = run_cli(tmp_path, "solve-phi3")
    assert code == 0 and report["results"]["residual"] == 0


def test_solve_phi3_nonzero_seed(tmp_path):
    code, _, report = run_cli(tmp_path, "solve-phi3", "seed_scale=1.0", "lam=0.2", "tol=1e-12")
    assert code == 0 and report["results"]["converged"]


def test_wightman_csv(tmp_path):
    code, out, report = run_cli(tmp_path, "wightman", "points=2", "n=4", "d=1")
    assert code == 0
    lines = (out / "wightman.csv").read_text().splitlines()
    assert lines[0] == "x1_0,x2_0,re,im"
    assert len(lines) == 1 + report["config"]["tuples"]
    assert report["results"]["max_relative_brute_force_gap"] < 1e-10


def test_reconstruct(tmp_path):
    code, out, report = run_cli(tmp_path, "reconstruct")
    assert code == 0 and report["results"]["round_trip_error"] < 1e-8
    assert (out / "moments.txt").exists()


def test_intertwine_check(tmp_path):
    code, _, report = run_cli(tmp_path, "intertwine-check", "k=3", "coefficient_sets=5")
    assert code == 0
    assert report["results"]["recurrence_exact"] and report["results"]["max_rational_defect"] == 0


def test_qcd_residual(tmp_path):
    code, out, report = run_cli(tmp_path, "qcd-residual")
    assert code == 0 and report["results"]["max_vacuum_value"] <= 1e-10
    assert (out / "qcd_residual.csv").read_text().startswith("equation,index1,index2,norm,vev_re,vev_im\n")


def test_qcd_residual_from_manifest(tmp_path):
    import numpy as np

    from opfield.grid import build_grid
    from opfield.qcd import QcdFieldSet, write_field_set

    manifest = write_field_set(QcdFieldSet.zeros(build_grid(4, 1), 2), tmp_path / "fields")
    code, _, report = run_cli(tmp_path, "qcd-residual", f'fields="{manifest}"', "n=1")
    assert code == 0 and report["results"]["gluon_max_norm"] == 0
    assert np.isclose(report["results"]["quark_max_norm"], 0)


def test_bad_config_exit_1(tmp_path, capsys):
    code, _, report = run_cli(tmp_path, "certify", config_text="seed = 1\nm = -2\n")
    assert code == 1 and report is None
    assert "m" in capsys.readouterr().err


def test_module_error_exit_1(tmp_path, capsys):
    code, _, _ = run_cli(tmp_path, "qcd-residual", 'fields="nowhere/manifest.txt"')
    assert code == 1
    assert "qcd-residual" in capsys.readouterr().err


@pytest.mark.parametrize("command", COMMANDS)
def test_determinism(tmp_path, command):
    extra = ["n=3"] if command in ("solve-sourced", "certify") else []
    _, a, _ = run_cli(tmp_path, command, *extra, name="a")
    _, b, _ = run_cli(tmp_path, command, *extra, name="b")
    csvs = sorted(p.name for p in a.glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_run_api(tmp_path):
    cfg = load_config(None, "wightman", ["seed=5"])
    assert run(cfg, tmp_path) == 0
    assert (tmp_path / "report.json").exists()
