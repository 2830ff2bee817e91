import json
import math
import os
import subprocess
import sys

import pytest

from jetvar.symcore import ChartContext, parse_expr

PROBLEMS = os.path.join(os.path.dirname(__file__), os.pardir, "problems")


def prob_path(name):
    return os.path.join(PROBLEMS, name)


def run_cli(*args):
    proc = subprocess.run([sys.executable, "-m", "jetvar.cli", *args],
                          capture_output=True, text=True)
    try:
        data = json.loads(proc.stdout)
    except json.JSONDecodeError:
        data = None
    return proc.returncode, data, proc.stderr


def strip_timing(data):
    data = dict(data)
    data.pop("timing", None)
    return data


HO = prob_path("harmonic_oscillator.prob")
FREE = prob_path("free_particle_field.prob")
QUARTIC = prob_path("quartic_r2.prob")


def test_derive_success_and_content():
    code, data, _ = run_cli("derive", HO)
    assert code == 0 and data["exit_code"] == 0
    assert data["checks"]["defect_zero"]["pass"]
    assert data["results"]["momenta"]["P(1;1)"] == "y(1;1)"


def test_derive_quartic_momentum_text():
    code, data, _ = run_cli("derive", QUARTIC)
    assert code == 0
    assert data["results"]["momenta"]["P(1;1)"] == "-y(1;1,1,1)"
    assert data["results"]["momenta"]["P(1;1,1)"] == "y(1;1,1)"


def test_derive_zero_lagrangian(tmp_path):
    f = tmp_path / "zero.prob"
    f.write_text("[problem]\nn = 1\nm = 1\nr = 1\n\n[lagrangian]\nL = \"0\"\n")
    code, data, _ = run_cli("derive", str(f))
    assert code == 0
    assert data["results"]["extended_lagrangian"] == "0"
    assert all(v == "0" for v in data["results"]["euler_lagrange"].values())


def test_malformed_expression_exit_1(tmp_path):
    f = tmp_path / "bad.prob"
    f.write_text("[problem]\nn = 1\nm = 1\nr = 1\n\n[lagrangian]\nL = \"y(1;1\"\n")
    code, data, _ = run_cli("derive", str(f))
    assert code == 1
    assert data["error"]["type"] == "ParseError"
    assert "position" in data["error"]["message"]


def test_degenerate_exit_3():
    code, data, _ = run_cli("legendre", prob_path("degenerate.prob"))
    assert code == 3
    assert data["error"]["type"] == "DegeneracyError"


def test_nongeodesic_exit_2(tmp_path):
    f = tmp_path / "bad_field.prob"
    f.write_text("[problem]\nn = 1\nm = 1\nr = 1\n\n"
                 "[lagrangian]\nL = \"1/2*y(1;1)^2\"\n\n"
                 "[field]\ny(1;1) = \"y(1)\"\n")
    code, data, _ = run_cli("field-check", str(f))
    assert code == 2
    assert not data["checks"]["geodesic"]["pass"]
    assert data["results"]["pulled_derivative"]


def test_exit_codes_are_exclusive():
    # 0 success, 1 validation, 2 failed check, 3 degenerate: one per situation
    assert run_cli("derive", HO)[0] == 0
    assert run_cli("derive", prob_path("nonexistent.prob"))[0] == 1
    assert run_cli("legendre", prob_path("degenerate.prob"))[0] == 3


def test_regularity_point_file():
    code, data, _ = run_cli("regularity", QUARTIC, "--at",
                            prob_path("origin1d_r2.at"))
    assert code == 0
    assert data["checks"]["regular"]["pass"]
    assert data["results"]["hessian"]["positive_definite"]


def test_regularity_missing_point_is_input_error():
    code, data, _ = run_cli("regularity", QUARTIC)
    assert code == 1


def test_hdd_solve_matches_sine():
    code, data, _ = run_cli("hdd-solve", HO, "--init", prob_path("ho.init"),
                            "--x0", "0", "--x1", "1", "--step", "1e-3")
    assert code == 0
    assert abs(data["results"]["final"]["y(1)"] - math.sin(1.0)) <= 1e-6
    assert data["checks"]["holonomy"]["pass"]


def test_field_check_and_hj_and_excess():
    code, data, _ = run_cli("field-check", FREE)
    assert code == 0 and data["results"]["status"] == "zero"
    code, data, _ = run_cli("hj", FREE)
    assert code == 0 and data["checks"]["closed"]["pass"]
    code, data, _ = run_cli("excess", FREE)
    assert code == 0
    ctx = ChartContext(1, 1, 1)
    got = parse_expr(data["results"]["excess"], ctx)
    assert got.equal_exact(parse_expr("1/2*(y(1;1)-1)^2", ctx))


def test_verify_extremal_and_first_variation():
    code, data, _ = run_cli("verify-extremal", HO)
    assert code == 0
    assert data["results"]["euler_lagrange_residual"] <= 1e-10
    code, data, _ = run_cli("first-variation", HO)
    assert code == 0
    assert data["checks"]["first_variation"]["pass"]


def test_tolerance_override_changes_outcome():
    code, data, _ = run_cli("first-variation", HO, "--tol",
                            "first_variation=1e-15")
    assert code == 2
    assert not data["checks"]["first_variation"]["pass"]


def test_unknown_tolerance_rejected():
    code, data, _ = run_cli("derive", HO, "--tol", "nope=1")
    assert code == 1


@pytest.mark.parametrize("args", [
    ("derive", HO),
    ("legendre", HO),
    ("derive", QUARTIC),
    ("field-check", FREE),
    ("excess", FREE),
    ("hj", FREE),
    ("verify-extremal", HO),
    ("hdd-solve", HO, "--init", prob_path("ho.init"),
     "--x0", "0", "--x1", "1", "--step", "1e-2"),
])
def test_reports_are_deterministic(args):
    _, first, _ = run_cli(*args)
    _, second, _ = run_cli(*args)
    assert strip_timing(first) == strip_timing(second)


def test_report_expressions_reparse():
    _, data, _ = run_cli("derive", QUARTIC)
    ctx = ChartContext(1, 1, 2)
    ctx.ensure_max_order(4)
    for text in data["results"]["momenta"].values():
        parse_expr(text, ctx)
    for text in data["results"]["euler_lagrange"].values():
        parse_expr(text, ctx)
    lt = parse_expr(data["results"]["extended_lagrangian"], ctx)
    assert not lt.is_zero()


def test_out_file_and_text_format(tmp_path):
    out = tmp_path / "report.json"
    code, _, _ = run_cli("derive", HO, "--out", str(out))
    assert code == 0
    assert json.loads(out.read_text())["exit_code"] == 0
    proc = subprocess.run([sys.executable, "-m", "jetvar.cli", "derive", HO,
                           "--format", "text"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "momenta" in proc.stdout


def test_derive_with_free_coefficient_table():
    code, data, _ = run_cli("derive", prob_path("g_family_r2.prob"))
    assert code == 0
    assert data["checks"]["defect_zero"]["pass"]
    assert "coefficient_corrections" in data["results"]
    assert data["results"]["coefficient_corrections"]["q(1;1|2)"] == "y(1)"
    assert data["results"]["coefficient_corrections"]["q(1;2|1)"] == "-y(1)"


def test_regularity_reports_indefinite_hessian():
    code, data, _ = run_cli("regularity", prob_path("indefinite.prob"),
                            "--at", prob_path("origin.at"))
    assert code == 0  # regular (full rank) even though indefinite
    assert data["checks"]["regular"]["pass"]
    assert not data["results"]["hessian"]["positive_definite"]


def test_hj_non_closed_field_exit_2_with_report(tmp_path):
    f = tmp_path / "nongeo.prob"
    f.write_text("[problem]\nn = 1\nm = 1\nr = 1\n\n"
                 "[lagrangian]\nL = \"1/2*y(1;1)^2\"\n\n"
                 "[field]\ny(1;1) = \"y(1)\"\n")
    code, data, _ = run_cli("hj", str(f))
    assert code == 2
    assert not data["checks"]["closed"]["pass"]
    assert data["exit_code"] == 2
