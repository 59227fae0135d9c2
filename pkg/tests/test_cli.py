import json
import subprocess
import sys

import pytest

from nilcurv import battery, cli, families
from nilcurv.tensorcalc import format_metric

FLAT = """\
dim = 4
coords = x,u,v,y
g[0][3] = 1
g[1][2] = 1
"""


def run(*args):
    return subprocess.run(
        [sys.executable, "-m", "nilcurv", *args], capture_output=True, text=True, check=False
    )


def run_json(capsys, *args):
    code = cli.main([*args, "--format", "json"])
    return code, json.loads(capsys.readouterr().out)


# ------------------------------------------------------------------- verify
@pytest.mark.parametrize(
    "family, n, op, order, sig",
    [
        ("szabo", 4, "szabo", 4, [3, 3]),
        ("osserman", 3, "jacobi", 3, [2, 3]),
        ("osserman", 5, "skew", 3, [3, 4]),
    ],
)
def test_verify_examples(capsys, family, n, op, order, sig):
    code, rep = run_json(capsys, "verify", "--family", family, "--n", str(n), "--operator", op)
    assert code == 0
    assert rep["nilpotency"]["order"] == order
    assert rep["metric"]["signature"] == sig
    assert rep["claim"]["holds"] is True and rep["status"] == "pass"


def test_verify_subprocess_text():
    res = run("verify", "--family", "szabo", "--n", "2")
    assert res.returncode == 0, res.stderr
    assert "nilpotent of order 2" in res.stdout
    assert "signature (2,2)" in res.stdout
    assert "status: pass" in res.stdout


def test_verify_pointwise_at_points(capsys):
    code, rep = run_json(capsys, "verify", "--family", "pointwise-szabo", "--n", "2", "--point", "x=0,u=0,v=0,y=0")
    assert code == 0 and rep["nilpotency"]["order"] == 1
    code, rep = run_json(capsys, "verify", "--family", "pointwise-szabo", "--n", "2", "--point", "x=1,u=1,v=1,y=1")
    assert code == 0 and rep["nilpotency"]["order"] == 2


def test_verify_gf_family(tmp_path, capsys):
    xi = tmp_path / "xi.txt"
    xi.write_text("# single u variable\n1\n")
    code, rep = run_json(capsys, "verify", "--family", "gf", "--f=-u1^2", "--xi", str(xi))
    assert code == 0
    assert rep["operator"]["kind"] == "ricci"
    assert rep["nilpotency"]["order"] == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--family", "szabo"],
        ["verify", "--family", "szabo", "--n", "1"],
        ["verify", "--family", "nope", "--n", "3"],
        ["verify", "--family", "gf"],
        ["verify", "--family", "szabo", "--n", "2", "--point", "x=0"],
        ["verify", "--family", "szabo", "--n", "2", "--point", "q=1,x=0,u=0,v=0,y=0"],
        ["verify", "--family", "szabo", "--n", "2", "--point", "x=a"],
        ["suite", "--n-max", "1"],
        [],
    ],
)
def test_usage_errors_exit_two(argv, capsys):
    assert cli.main(argv) == 2


# -------------------------------------------------------------------- check
def test_check_flat_file(tmp_path, capsys):
    p = tmp_path / "flat.txt"
    p.write_text(FLAT)
    code, rep = run_json(capsys, "check", str(p))
    assert code == 0
    assert rep["nilpotency"]["order"] == 1
    assert all(rep["invariants"].values())


def test_check_matches_verify_for_g2(tmp_path, capsys):
    p = tmp_path / "g2.txt"
    p.write_text(format_metric(families.make_szabo_metric(2)))
    code_c, via_file = run_json(capsys, "check", str(p), "--operator", "szabo")
    code_v, via_family = run_json(capsys, "verify", "--family", "szabo", "--n", "2")
    assert code_c == code_v == 0
    for key in ("metric", "operator", "nilpotency", "characteristic", "invariants", "consistent"):
        assert via_file[key] == via_family[key], key


def test_check_rejects_nonconstant_determinant(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("dim = 2\ncoords = u,w\ng[0][0] = u\ng[1][1] = 1\n")
    res = run("check", str(p))
    assert res.returncode == 2
    assert "det = u" in res.stderr


def test_check_parse_error_names_line(tmp_path):
    p = tmp_path / "broken.txt"
    p.write_text("dim = 2\ncoords = a,b\ng[0][0] = a +\n")
    res = run("check", str(p))
    assert res.returncode == 2
    assert "line 3" in res.stderr


def test_check_missing_file(tmp_path, capsys):
    assert cli.main(["check", str(tmp_path / "absent.txt")]) == 2


def test_check_not_nilpotent_certificate(tmp_path, capsys):
    # Riemannian round-ish metric with constant determinant: Jacobi is not nilpotent
    p = tmp_path / "skewed.txt"
    p.write_text("dim = 2\ncoords = a,b\ng[0][0] = 1\ng[0][1] = a*b\ng[1][1] = 1 + a^2*b^2\n")
    code, rep = run_json(capsys, "check", str(p), "--operator", "ricci")
    assert code == 0
    assert rep["nilpotency"]["nilpotent"] is False
    assert rep["nilpotency"]["power_support"]


# ------------------------------------------------------------------ suite
@pytest.mark.parametrize("n_max", [2, 5])
def test_suite_passes(n_max, capsys):
    code = cli.main(["suite", "--n-max", str(n_max)])
    out = capsys.readouterr().out
    assert code == 0
    assert out.strip().endswith("all claims hold")
    assert f"szabo-order-{n_max}" in out


def test_suite_reports_tampered_family(monkeypatch, capsys):
    real = families.make_szabo_metric

    def tampered(n):
        return families.make_osserman_metric(n) if n == 3 else real(n)

    monkeypatch.setattr(families, "make_szabo_metric", tampered)
    code = cli.main(["suite", "--n-max", "3"])
    out = capsys.readouterr().out
    assert code == 1
    assert "failing: " in out and "szabo-order-3" in out.splitlines()[-1]


def test_suite_json(capsys):
    code, doc = run_json(capsys, "suite", "--n-max", "2")
    assert code == 0 and doc["status"] == "pass"
    assert [r["claim"] for r in doc["rows"]][0] == "gf-closed-forms"


# ----------------------------------------------------------- determinism
def _strip_timing(text):
    doc = json.loads(text)
    doc.pop("timing", None)
    return doc


def test_reports_are_deterministic():
    args = ("verify", "--family", "osserman", "--n", "3", "--operator", "skew", "--format", "json", "--seed", "7")
    a, b = run(*args), run(*args)
    assert a.returncode == b.returncode == 0
    assert _strip_timing(a.stdout) == _strip_timing(b.stdout)
    ta = a.stdout.splitlines()
    tb = b.stdout.splitlines()
    assert [l for l in ta if "seconds" not in l] == [l for l in tb if "seconds" not in l]


def test_exit_code_for_failed_claim(monkeypatch, capsys):
    monkeypatch.setattr(battery, "family_claim", lambda *a, **k: battery.Claim("order 5", expected_order=5))
    code, rep = run_json(capsys, "verify", "--family", "szabo", "--n", "2")
    assert code == battery.EXIT_CLAIM
    assert rep["claim"]["holds"] is False and rep["status"] == "fail"


def test_exit_code_for_inconsistency(monkeypatch, capsys):
    monkeypatch.setattr(battery, "metric_invariants", lambda m: {"forced": False})
    assert cli.main(["verify", "--family", "szabo", "--n", "2"]) == battery.EXIT_INCONSISTENT
