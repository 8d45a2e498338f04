from __future__ import annotations

import json
import math

import numpy as np
import pytest

from wagner.cli import main, parse_init, parse_list, parse_span
from wagner.errors import ConfigError, ExprSyntaxError
from wagner.io import CSV_HEADER, load_surface, parse_builtin_ref, read_csv, surface_from_dict

TORUS = "builtin:torus:R=2,r=1"
INIT = "u1=0,u2=0.3,angle=0.4,speed=1"


def run(*argv):
    return main([str(a) for a in argv])


# -- argument helpers --------------------------------------------------------------


def test_small_parsers():
    assert parse_span("0:2*pi") == (0.0, 2 * math.pi)
    assert parse_list("0, 1,3") == [0.0, 1.0, 3.0]
    d = parse_init("u1=0,u2=pi/2,angle=pi/2,speed=2")
    assert d["Q1"] == pytest.approx(0.0, abs=1e-15) and d["Q2"] == pytest.approx(2.0)
    assert parse_init("u1=0,u2=1,Q2=0.5")["Q1"] == 0.0
    for bad in ("u1=0", "u1=0,u2=1,angle=1,Q1=1", "u1=0,u2=1,w=2", "u1=0,u2", "minK"):
        with pytest.raises(ConfigError):
            parse_init(bad)
    with pytest.raises(ConfigError):
        parse_span("3")


def test_min_curvature_init():
    d = parse_init("minK,angle=0", load_surface(TORUS))
    assert d["u2"] == pytest.approx(math.pi, abs=1e-6)


# -- surfaces ------------------------------------------------------------------------


def test_builtin_refs():
    assert parse_builtin_ref("builtin:torus:R=3,r=1") == ("torus", {"R": "3", "r": "1"})
    assert parse_builtin_ref("builtin:sphere") == ("sphere", {})
    s = load_surface("builtin:sphere:K0=4")
    assert s.chart.frame_terms(0.0, 0.3)[6] == pytest.approx(4.0)


def test_surface_files(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"kind": "revolution", "A": "2 + cos(v)", "u2_domain": [0, "2*pi"],
                                "u2_period": "2*pi"}))
    s = load_surface(str(path))
    assert s.chart.frame_terms(0.0, 0.0)[6] == pytest.approx(1 / 3)
    m = surface_from_dict({"kind": "metric", "g11": "1", "g12": "0", "g22": "1", "u1_domain": [-1, 1],
                           "u2_domain": [-1, 1]})
    assert m.chart.frame_terms(0.0, 0.0)[6] == 0.0


@pytest.mark.parametrize(
    "d",
    [
        {"A": "1"},
        {"kind": "cone"},
        {"kind": "revolution", "A": "1"},
        {"kind": "revolution", "A": "1", "u2_domain": [0, 1], "colour": "red"},
        {"kind": "metric", "g11": "1", "g12": "0", "u1_domain": [0, 1], "u2_domain": [0, 1]},
        {"kind": "builtin"},
    ],
)
def test_schema_errors(d):
    with pytest.raises(ConfigError):
        surface_from_dict(d)


def test_expression_error_names_field_and_offset():
    with pytest.raises(ExprSyntaxError) as info:
        surface_from_dict({"kind": "revolution", "A": "2 + cos(v", "u2_domain": [0, 1]})
    assert info.value.offset == 9
    assert "'A'" in str(info.value)


def test_bad_surface_files(tmp_path):
    with pytest.raises(ConfigError):
        load_surface(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_surface(str(bad))
    bad.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_surface(str(bad))


# -- commands ------------------------------------------------------------------------


def test_integrate_writes_csv(tmp_path):
    out = tmp_path / "run.csv"
    assert run("integrate", "--surface", TORUS, "--C", 0.5, "--init", INIT, "--t-span", "0:5", "--out", out) == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    assert raw.split(b"\n", 1)[0].decode() == ",".join(CSV_HEADER)
    cols = read_csv(out)
    assert cols["t"][0] == 0.0 and cols["t"][-1] == 5.0
    assert np.all(np.isnan(cols["phi"]))
    assert np.ptp(cols["C3sq"]) < 1e-8


def test_rk4_output_is_deterministic(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert run("integrate", "--surface", TORUS, "--C", 1, "--init", INIT, "--t-span", "0:3",
                   "--method", "rk4", "--h-init", 0.01, "--out", p) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert len(read_csv(paths[0])["t"]) == 301


def test_one_csv_per_charge(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run("integrate", "--surface", TORUS, "--C", "0,1,3,0.5", "--init", INIT, "--t-span", "0:2",
               "--out", out, "--jobs", 2, "--report", tmp_path / "r.json") == 0
    files = sorted(tmp_path.glob("sweep_run*.csv"))
    assert len(files) == 4
    report = json.loads((tmp_path / "r.json").read_text())
    assert [r["C"] for r in report["runs"]] == [0, 1, 3, 0.5]


def test_lift_solution_and_svg(tmp_path):
    out, svg = tmp_path / "l.csv", tmp_path / "l.svg"
    assert run("integrate", "--surface", TORUS, "--C", 0.5, "--init", INIT, "--t-span", "0:3",
               "--lift-solution", "--phi0", 0.2, "--out", out, "--svg", svg) == 0
    cols = read_csv(out)
    assert cols["phi"][0] == pytest.approx(0.2)
    assert np.allclose(cols["Q3"], 0.5 * cols["K"])
    assert svg.read_text().lstrip().startswith("<?xml")


def test_lift_reaching_sigma_exits_2(tmp_path, capsys):
    out = tmp_path / "lift.csv"
    code = run("lift", "--surface", TORUS, "--C", 0.2, "--init", "u1=0,u2=0.3,angle=pi/2", "--t-span", "0:10",
               "--out", out)
    assert code == 2
    assert "SingularApproach" in capsys.readouterr().err
    assert read_csv(out)["t"][-1] < 10


def test_invariants_report(tmp_path):
    rep = tmp_path / "inv.json"
    assert run("invariants", "--surface", "builtin:sphere", "--C", 0.7, "--init", "u1=0,u2=1,angle=0.3",
               "--t-span", "0:10", "--lifted", "--report", rep) == 0
    data = json.loads(rep.read_text())["runs"][0]
    assert data["initial"]["C1"] == pytest.approx(0.7)
    assert max(data["drift"].values()) < 1e-8


def test_region(tmp_path):
    rep = tmp_path / "region.json"
    assert run("region", "--surface", TORUS, "--C", 3, "--init", "u1=0,u2=pi/2,angle=0", "--t-span", "0:20",
               "--report", rep, "--svg", tmp_path / "region.svg") == 0
    data = json.loads(rep.read_text())
    assert data["K_max"] == pytest.approx(1 / 3)
    assert data["trajectory_inside"] is True


def test_region_rejects_zero_charge(capsys):
    assert run("region", "--surface", TORUS, "--C", 0, "--init", INIT) == 1
    assert "ConfigError" in capsys.readouterr().err


def test_quadrature(tmp_path):
    rep, out = tmp_path / "q.json", tmp_path / "q.csv"
    assert run("quadrature", "--surface", TORUS, "--C", 0.5, "--init", "u1=0,u2=0.3,angle=0.8",
               "--t-span", "0:5", "--atol", 1e-12, "--rtol", 1e-12, "--report", rep, "--out", out) == 0
    data = json.loads(rep.read_text())
    assert data["compared_samples"] > 10
    assert data["max_u1_deviation"] < 1e-8
    assert out.read_text().startswith("u2,u1\n")


def test_tables(tmp_path):
    rep = tmp_path / "t.json"
    assert run("tables", "--surface", TORUS, "--point", "u1=0,u2=0.4", "--report", rep) == 0
    data = json.loads(rep.read_text())
    assert data["gamma_hat"][0][1][2] == 0.5
    assert max(data["oracle_deltas"].values()) < 1e-6


def test_tables_on_sigma_exits_2(capsys):
    assert run("tables", "--surface", TORUS, "--point", "u1=0,u2=pi/2") == 2
    assert "SingularPoint" in capsys.readouterr().err


def test_spec_file_and_flag_precedence(tmp_path):
    spec = tmp_path / "spec.json"
    out = tmp_path / "spec.csv"
    spec.write_text(json.dumps({"command": "project", "surface": TORUS, "C": 1.0, "init": INIT,
                                "t_span": "0:4", "out": str(out)}))
    assert run("integrate", "--spec", spec, "--t-span", "0:1") == 0
    assert read_csv(out)["t"][-1] == 1.0
    assert run("batch", spec, "--jobs", 2) == 0
    assert read_csv(out)["t"][-1] == 4.0


def test_spec_errors(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"surface": TORUS, "colour": "red"}))
    assert run("integrate", "--spec", spec) == 1
    assert run("integrate", "--spec", tmp_path / "nope.json") == 1
    assert run("batch", tmp_path / "nope.json") == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["integrate", "--surface", TORUS, "--C", 1, "--init", INIT, "--atol", -1],
        ["integrate", "--surface", "builtin:torus:R=1,r=2", "--C", 1, "--init", INIT],
        ["integrate", "--surface", "builtin:cone", "--C", 1, "--init", INIT],
        ["integrate", "--C", 1, "--init", INIT],
        ["integrate", "--surface", TORUS, "--C", 1],
        ["frobnicate"],
    ],
)
def test_config_errors_exit_1(argv):
    assert run(*argv) == 1


def test_invalid_expression_reports_offset(tmp_path, capsys):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"kind": "revolution", "A": "2 + * cos(v)", "u2_domain": [0, 6]}))
    assert run("integrate", "--surface", path, "--C", 1, "--init", INIT) == 1
    assert "byte offset 4" in capsys.readouterr().err


def test_numerical_error_exit_2():
    # heading for the pole leaves the chart
    assert run("integrate", "--surface", "builtin:sphere", "--C", 0, "--init", "u1=0,u2=0.5,angle=-pi/2",
               "--t-span", "0:2") == 2
