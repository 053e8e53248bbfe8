import json

import numpy as np
import pytest

from tsfrac.cli import main
from tsfrac.delta_calculus import GridFunction, build_mesh, delta_integral, read_csv, write_csv
from tsfrac.timescale import load_timescale

from conftest import HYBRID, INTEGERS, SHIFTED, UNIT


def _ts(tmp_path, ts, name="ts.json"):
    path = tmp_path / name
    path.write_text(json.dumps(ts.to_dict()))
    return str(path)


def _pot(tmp_path, data, name="pot.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_describe(tmp_path, capsys):
    assert main(["describe", "--timescale", _ts(tmp_path, HYBRID)]) == 0
    out = capsys.readouterr().out
    assert "point 0.6" in out and "0.5: right-scattered, left-dense" in out


def test_describe_errors(tmp_path, capsys):
    assert main(["describe", "--timescale", str(tmp_path / "absent.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"segments": [{"kind": "interval", "lo": 2, "hi": 1}]}')
    assert main(["describe", "--timescale", str(bad)]) == 2
    assert "segment 0" in capsys.readouterr().err


def test_usage_error_is_config_error():
    assert main(["frac-int", "--alpha", "0.5"]) == 2


def test_frac_int_order_one_matches_delta_integral(tmp_path):
    ts = _ts(tmp_path, HYBRID)
    mesh = build_mesh(load_timescale(ts), 0.01)
    f = GridFunction.from_callable(mesh, lambda t: 1 + 0 * t)
    write_csv(tmp_path / "f.csv", f)
    args = ["frac-int", "--timescale", ts, "--alpha", "1", "--input", str(tmp_path / "f.csv"), "--output", str(tmp_path / "g.csv")]
    assert main(args) == 0
    g = read_csv(tmp_path / "g.csv", mesh)
    want = [delta_integral(f, t, mesh.b)[0] for t in mesh.nodes]
    np.testing.assert_allclose(g.scalar, want, atol=1e-12)


def test_frac_deriv_kinds(tmp_path):
    ts = _ts(tmp_path, UNIT)
    mesh = build_mesh(UNIT, 0.01)
    write_csv(tmp_path / "f.csv", GridFunction(mesh, np.ones(mesh.n)))
    base = ["frac-deriv", "--timescale", ts, "--alpha", "0.5", "--input", str(tmp_path / "f.csv")]
    assert main(base + ["--kind", "caputo", "--output", str(tmp_path / "c.csv")]) == 0
    np.testing.assert_allclose(read_csv(tmp_path / "c.csv", mesh).scalar, 0.0, atol=1e-12)
    assert main(base + ["--side", "left", "--output", str(tmp_path / "l.csv")]) == 0


def test_frac_mismatch_exit_3_and_no_output(tmp_path):
    ts = _ts(tmp_path, UNIT)
    coarse = build_mesh(UNIT, 0.1)
    write_csv(tmp_path / "f.csv", GridFunction(coarse, np.ones(coarse.n)))
    out = tmp_path / "g.csv"
    assert main(["frac-int", "--timescale", ts, "--alpha", "0.5", "--input", str(tmp_path / "f.csv"), "--output", str(out)]) == 3
    assert not out.exists()
    (tmp_path / "w.csv").write_text("t,v1\n0.0,1.0,3.0\n")
    assert main(["frac-int", "--timescale", ts, "--alpha", "0.5", "--input", str(tmp_path / "w.csv"), "--output", str(out)]) == 3
    assert not out.exists()


def test_frac_bad_alpha(tmp_path):
    ts = _ts(tmp_path, UNIT)
    assert main(["frac-int", "--timescale", ts, "--alpha", "0", "--input", "x", "--output", "y"]) == 2


def test_verify_identities_on_integers(tmp_path):
    report = tmp_path / "r.csv"
    assert main(["verify", "--suite", "identities", "--timescale", _ts(tmp_path, INTEGERS),
                 "--alpha-grid", "0.25,0.5,0.75,1.0", "--report", str(report)]) == 0
    lines = report.read_text().splitlines()
    assert lines[0] == "suite,case,alpha,p,h_max,value,threshold,pass"
    assert len(lines) == 21 and all(line.endswith(",true") for line in lines[1:])


def test_verify_coarse_mesh_fails(tmp_path):
    report = tmp_path / "r.csv"
    code = main(["verify", "--suite", "identities", "--timescale", _ts(tmp_path, HYBRID),
                 "--h-max", "0.25", "--report", str(report)])
    assert code == 1
    assert ",false" in report.read_text()


def test_verify_is_deterministic_and_seed_sensitive(tmp_path, monkeypatch):
    ts = _ts(tmp_path, SHIFTED)
    base = ["verify", "--suite", "sobolev,boundedness", "--timescale", ts, "--alpha", "0.75",
            "--p", "2", "--samples", "5", "--h-max", "0.0078125", "--seed", "11"]
    for name in ("a.csv", "b.csv"):
        assert main(base + ["--report", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    monkeypatch.setenv("TSFRAC_SEED", "12")
    assert main(base + ["--report", str(tmp_path / "c.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "c.csv").read_bytes()


def test_verify_validation_is_fail_fast(tmp_path, monkeypatch):
    report = tmp_path / "r.csv"
    ts = _ts(tmp_path, UNIT)
    assert main(["verify", "--suite", "sobolev", "--timescale", ts, "--report", str(report)]) == 2
    assert main(["verify", "--suite", "nope", "--timescale", ts, "--report", str(report)]) == 2
    assert main(["verify", "--timescale", ts, "--p", "0.5", "--report", str(report)]) == 2
    assert main(["verify", "--timescale", ts, "--alpha-grid", "0.5,x", "--report", str(report)]) == 2
    monkeypatch.setenv("TSFRAC_SEED", "abc")
    assert main(["verify", "--timescale", ts, "--report", str(report)]) == 2
    assert not report.exists()


def _solve(tmp_path, pot, *extra, alpha="0.75"):
    out, diag = tmp_path / "u.csv", tmp_path / "d.json"
    code = main(["solve", "--timescale", _ts(tmp_path, UNIT), "--alpha", alpha, "--potential", pot,
                 "--h-max", "0.03125", "--out", str(out), "--diag", str(diag), *extra])
    return code, out, diag


def test_solve_linear_classical(tmp_path):
    code, out, diag = _solve(tmp_path, _pot(tmp_path, {"kind": "linear", "f": [2.0]}), alpha="1")
    assert code == 0
    header = out.read_text().splitlines()[0]
    assert header == "t,u1,dalpha_u1"
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    np.testing.assert_allclose(data[:, 1], data[:, 0] * (1 - data[:, 0]), atol=1e-12)
    d = json.loads(diag.read_text())
    assert {"energy", "residual", "sigma", "rho", "iterations"} <= set(d)


def test_solve_quartic_mountain_pass(tmp_path):
    code, out, diag = _solve(tmp_path, _pot(tmp_path, {"kind": "quartic", "dim": 2}), "--method", "mountain-pass")
    assert code == 0
    d = json.loads(diag.read_text())
    assert d["sigma"] > 0 and d["energy"] >= d["sigma"]
    assert out.read_text().splitlines()[0] == "t,u1,u2,dalpha_u1,dalpha_u2"


def test_solve_certificate_rejections(tmp_path):
    quartic = _pot(tmp_path, {"kind": "quartic", "coercivity": {"a_bar": 0.1, "b_bar": 0, "c_bar": 0, "gamma": 1.5}})
    code, out, diag = _solve(tmp_path, quartic)
    assert code == 2 and not out.exists() and not diag.exists()
    code, out, _ = _solve(tmp_path, _pot(tmp_path, {"kind": "quartic"}, "q.json"))
    assert code == 2 and not out.exists()
    weak_ar = _pot(tmp_path, {"kind": "custom-polynomial", "terms": [{"coef": 1, "power": 4}], "ar": {"mu": 0.2, "M": 1}}, "w.json")
    code, out, _ = _solve(tmp_path, weak_ar, "--method", "mountain-pass")
    assert code == 2 and not out.exists()


def test_solve_skip_certificates(tmp_path):
    pot = _pot(tmp_path, {"kind": "custom-polynomial", "terms": [{"coef": -1, "power": 4}]})
    code, out, _ = _solve(tmp_path, pot, "--skip-certificates")
    assert code == 0 and out.exists()


def test_solve_max_iterations(tmp_path):
    pot = _pot(tmp_path, {"kind": "custom-polynomial", "terms": [{"coef": 1, "power": 1.5}],
                          "coercivity": {"a_bar": 0, "b_bar": 1, "c_bar": 0, "gamma": 0.5}})
    code, out, diag = _solve(tmp_path, pot, "--max-iter", "2")
    assert code == 1
    assert json.loads(diag.read_text())["converged"] is False


@pytest.mark.parametrize("data", [[1, 2], {"kind": "cubic"}, {"kind": "linear"}, {"kind": "custom-polynomial", "terms": [{"coef": 1}]}])
def test_solve_bad_potential_files(tmp_path, data):
    code, out, _ = _solve(tmp_path, _pot(tmp_path, data))
    assert code == 2 and not out.exists()


def test_solve_order_range(tmp_path):
    code, out, _ = _solve(tmp_path, _pot(tmp_path, {"kind": "linear", "f": [1.0]}), alpha="0.5")
    assert code == 2 and not out.exists()
