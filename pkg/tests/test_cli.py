import csv
import json
import os

import pytest

from qikdv import cli

SMALL = """
[run]
seed = 3

[grid]
length = 40
n = 256

[equation]
name = {equation}

[time]
dt = 1e-4
t_end = 0.02
sample_every = 50

[initial]
kind = {kind}
c = 4
x0 = -5
amplitude = -0.2
width = 1.5

{extra}
"""


def _config(tmp_path, equation="kdv", kind="soliton", extra="", name="run.ini"):
    path = tmp_path / name
    path.write_text(SMALL.format(equation=equation, kind=kind, extra=extra))
    return str(path)


def _run(args):
    return cli.main(args)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _outputs(out):
    return {f: open(os.path.join(out, f), "rb").read() for f in sorted(os.listdir(out)) if f != "timing.json"}


def test_simulate_soliton(tmp_path):
    out = str(tmp_path / "out")
    assert _run(["simulate", "--config", _config(tmp_path), "--out", out]) == 0
    summary = _read_csv(os.path.join(out, "summary.csv"))
    assert float(summary[-1]["linf_vs_analytic"]) < 1e-6
    man = json.load(open(os.path.join(out, "manifest.json")))
    assert man["command"] == "simulate"
    assert len(man["config_hash"]) == 64
    assert "charges.csv" in man["outputs"]
    charges = _read_csv(os.path.join(out, "charges.csv"))
    assert list(charges[0])[:3] == ["t", "Q0", "Q1"]
    assert "Q0_drift" in charges[0]
    # the soliton gauge is singular, so the principal value is reported with the location
    assert man["charges"]["regular_singularity_x"] is not None


def test_simulate_is_deterministic(tmp_path):
    cfg = _config(tmp_path, kind="sech2", equation="deformed_kdv",
                  extra="[deformation]\nkind = uuxx\nepsilon = 0.05\n\n[charges]\norders = 1")
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert _run(["simulate", "--config", cfg, "--out", a]) == 0
    assert _run(["simulate", "--config", cfg, "--out", b]) == 0
    assert _outputs(a) == _outputs(b)
    assert os.path.exists(os.path.join(a, "timing.json"))


def test_uuxx_charges_use_regular_gauge(tmp_path):
    cfg = _config(tmp_path, kind="sech2", equation="deformed_kdv",
                  extra="[deformation]\nkind = uuxx\nepsilon = 0.05")
    out = str(tmp_path / "out")
    assert _run(["charges", "--config", cfg, "--out", out, "--orders", "0"]) == 0
    rows = _read_csv(os.path.join(out, "charges.csv"))
    assert all(abs(float(r["Lambda0"])) < 1e-12 for r in rows)
    assert not os.path.exists(os.path.join(out, "trajectory.csv"))


def test_invalid_grid_names_key(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[grid]\nn = 100\n")
    code = _run(["simulate", "--config", str(path), "--out", str(tmp_path / "o")])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["key"] == "grid.n"
    assert err["exit_code"] == 2


def test_unknown_equation_is_validation_error(tmp_path, capsys):
    assert _run(["simulate", "--config", _config(tmp_path, equation="burgers"), "--out", str(tmp_path / "o")]) == 2
    assert json.loads(capsys.readouterr().err)["key"] == "equation.name"


def test_malformed_config_is_validation_error(tmp_path, capsys):
    path = tmp_path / "broken.ini"
    path.write_text("no section header\n")
    assert _run(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_missing_config_is_io_error(tmp_path, capsys):
    assert _run(["simulate", "--config", str(tmp_path / "absent.ini"), "--out", str(tmp_path / "o")]) == 4
    assert json.loads(capsys.readouterr().err)["error"] == "IOError"


def test_blow_up_is_numerical_error(tmp_path, capsys):
    cfg = tmp_path / "blow.ini"
    cfg.write_text("[grid]\nn = 128\n[time]\ndt = 0.05\nt_end = 5\n[initial]\nkind = sech2\namplitude = 200\n")
    assert _run(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert json.loads(capsys.readouterr().err)["error"] == "BlowUpError"


def test_bad_orders_flag(tmp_path):
    assert _run(["simulate", "--config", _config(tmp_path), "--out", str(tmp_path / "o"), "--orders", "5"]) == 2


def test_verify_algebra_report_and_seed(tmp_path):
    cfg = tmp_path / "alg.ini"
    cfg.write_text("[algebra]\ntriples = 50\nbch_samples = 10\n")
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert _run(["verify-algebra", "--config", str(cfg), "--out", a, "--seed", "5"]) == 0
    assert _run(["verify-algebra", "--config", str(cfg), "--out", b, "--seed", "5"]) == 0
    assert _outputs(a) == _outputs(b)
    report = json.load(open(os.path.join(a, "manifest.json")))["report"]
    assert report["pass"] and report["antisymmetry_failures"] == 0 and report["jacobi_failures"] == 0
    assert json.load(open(os.path.join(a, "manifest.json")))["seed"] == 5


def test_verify_algebra_detects_corruption(tmp_path):
    cfg = tmp_path / "alg.ini"
    cfg.write_text("[algebra]\ntriples = 50\nbch_samples = 5\n")
    out = str(tmp_path / "c")
    assert _run(["verify-algebra", "--config", str(cfg), "--out", out, "--corrupt"]) == 1
    report = json.load(open(os.path.join(out, "manifest.json")))["report"]
    assert report["table"] == "corrupted"
    assert report["jacobi_failures"] + report["antisymmetry_failures"] > 0


def test_map_nls_needs_two_points(tmp_path, capsys):
    cfg = tmp_path / "map.ini"
    cfg.write_text("[map]\nepsilons = 0.05\n")
    assert _run(["map-nls", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "need >=2 points" in json.loads(capsys.readouterr().err)["message"]


def test_map_nls_beta_column(tmp_path):
    cfg = tmp_path / "map.ini"
    cfg.write_text("[map]\nepsilons = 0.04, 0.08\ndeformation_epsilon = 0.03\nt_end = 0.2\n")
    out = str(tmp_path / "o")
    assert _run(["map-nls", "--config", str(cfg), "--out", out]) == 0
    rows = _read_csv(os.path.join(out, "scaling.csv"))
    assert [float(r["epsilon"]) for r in rows] == [0.04, 0.08]
    assert all(float(r["beta"]) == 1.0 + 5.0 * 0.03 / 3.0 for r in rows)
    assert len({r["slope"] for r in rows}) == 1


def test_coupled_reduction_outputs(tmp_path):
    cfg = tmp_path / "cp.ini"
    cfg.write_text("[grid]\nn = 256\n[coupled]\nmode = reduction\n[time]\nt_end = 0.01\nsample_every = 50\n"
                   "[initial]\nkind = sech2\namplitude = -0.2\nwidth = 1.5\n")
    out = str(tmp_path / "o")
    assert _run(["coupled", "--config", str(cfg), "--out", out, "--orders", "1"]) == 0
    rows = _read_csv(os.path.join(out, "coupled_charges.csv"))
    assert {"R0_re", "R1_im", "rate1_re"} <= set(rows[0])
    summary = _read_csv(os.path.join(out, "coupled_summary.csv"))
    assert float(summary[0]["q_max_abs"]) == 1.0


def test_coupled_unknown_mode(tmp_path):
    cfg = tmp_path / "cp.ini"
    cfg.write_text("[coupled]\nmode = sideways\n")
    assert _run(["coupled", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("name", ["kdv_soliton.ini", "algebra.ini", "map_nls.ini", "negative_bump.ini"])
def test_shipped_configs_parse(name):
    from qikdv.runio import RunConfig

    cfg = RunConfig.from_file(os.path.join(os.path.dirname(__file__), "..", "configs", name))
    assert cfg.canonical()
    assert len(cfg.hash()) == 64


def test_unknown_deformation_kind(tmp_path, capsys):
    cfg = _config(tmp_path, equation="deformed_kdv", extra="[deformation]\nkind = wobble\nepsilon = 0.1")
    assert _run(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert json.loads(capsys.readouterr().err)["key"] == "deformation.kind"
