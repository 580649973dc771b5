import io
import json

import numpy as np
import pytest

from contact3.cli import run
from contact3.expr import Compiled
from contact3.specfile import load

PHI_ZERO = """\
[manifold]
name = broken
[tensor]
g = 1, 0, 0, 1, 0, 1
phi = 0, 0, 0, 0, 0, 0, 0, 0, 0
xi = 1, 0, 0
"""


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_verify_passes():
    code, out, _ = call("verify", "catalog:example3")
    assert code == 0
    assert out.rstrip().endswith("result: PASS")


def test_verify_failure_names_axiom(tmp_path):
    p = tmp_path / "broken.cmm"
    p.write_text(PHI_ZERO)
    code, out, _ = call("verify", str(p), "--points", "8")
    assert code == 1
    assert "FAIL" in out and "phi_squared" in out


def test_missing_file():
    code, _, err = call("verify", "/no/such/file.cmm")
    assert code == 2
    assert "no such file" in err


def test_parse_error_reports_position(tmp_path):
    p = tmp_path / "bad.cmm"
    p.write_text("[manifold]\n[frame]\nxi = 1, 0, 0\ne = 0, 1, 0\nphie = 0, 0, (1\n")
    code, _, err = call("verify", str(p))
    assert code == 2
    assert f"{p}:5:" in err


@pytest.mark.parametrize("argv", [
    ("dhomothety", "catalog:example1", "--alpha", "0"),
    ("dhomothety", "catalog:example1", "--alpha", "-2"),
    ("dhomothety", "catalog:example1"),
    ("chart", "--case", "3"),
    ("chart", "--case", "1", "--k3", "0"),
    ("chart", "--case", "1", "--k3", "exp(z)"),
    ("verify", "catalog:example1", "--points", "0"),
    ("verify", "catalog:example1", "--tol", "-1"),
    ("bogus",),
    (),
])
def test_usage_errors(argv):
    assert call(*argv)[0] == 2


def test_nullity_example1():
    code, out, _ = call("nullity", "catalog:example1", "--format", "json", "--points", "16")
    assert code == 0
    doc = json.loads(out)
    assert doc["classification"] == "generalized (kappa,mu)"
    for r in doc["points"]:
        x3 = r["point"][2]
        assert r["kappa"] == pytest.approx((x3 ** 4 - 1) / x3 ** 4, rel=1e-6)


def test_nullity_labels():
    assert "Sasakian" in call("nullity", "catalog:sasakian", "--points", "8")[1]
    code, out, _ = call("nullity", "catalog:example3", "--points", "8", "--format", "json")
    doc = json.loads(out)
    assert doc["classification"] == "generic"
    assert max(r["residual"] for r in doc["points"]) > 1e-8


def test_dhomothety_example1():
    code, out, _ = call("dhomothety", "catalog:example1", "--alpha", "2", "--format", "json")
    assert code == 0
    checks = {c["name"]: c for c in json.loads(out)["laws"]["checks"]}
    assert checks["kappa_law"]["residual"] < 1e-7 and checks["mu_law"]["residual"] < 1e-7


def test_dhomothety_alpha_one_emits_input(tmp_path):
    target = tmp_path / "out.cmm"
    assert call("dhomothety", "catalog:example1", "--alpha", "1", "--emit", str(target))[0] == 0
    a, b = load("catalog:example1"), load(target)
    pts = a.chart().sample(8, 3)
    for key in a.fields:
        va = Compiled(np.array(a.fields[key], dtype=object), a.coords)(pts)
        vb = Compiled(np.array(b.fields[key], dtype=object), b.coords)(pts)
        np.testing.assert_array_equal(va, vb)


def test_chart_emits_example3(tmp_path):
    target = tmp_path / "c.cmm"
    code, out, _ = call("chart", "--case", "1", "--k3", "1", "--r", "0", "--beta", "-1", "--H", "-y",
                        "--emit", str(target))
    assert code == 0
    gen, ref = load(target), load("catalog:example3")
    pts = ref.chart().sample(8, 5)
    for key in ("xi", "e", "phie"):
        va = Compiled(np.array(gen.fields[key], dtype=object), gen.coords)(pts)
        vb = Compiled(np.array(ref.fields[key], dtype=object), ref.coords)(pts)
        np.testing.assert_allclose(va, vb, atol=1e-12)


def test_chart_case2_log_profile():
    code, out, _ = call("chart", "--case", "2", "--k3", "z", "--H", "y^2", "--format", "json")
    assert code == 0
    assert "ln(z)" in json.loads(out)["lambda"]


def test_examples_run():
    code, out, _ = call("examples", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    entries = {e["name"]: e for e in doc["entries"]}
    assert set(entries) >= {"example1", "example3", "example4", "sasakian"}
    assert entries["example4"]["discrepancies"]
    assert not entries["example3"]["discrepancies"]


@pytest.mark.parametrize("argv", [
    ("examples",),
    ("examples", "--format", "json"),
    ("verify", "catalog:example1", "--verbose"),
    ("nullity", "catalog:example4", "--format", "json"),
])
def test_byte_identical_reruns(argv):
    assert call(*argv) == call(*argv)


def test_json_numbers_round_trip():
    out = call("nullity", "catalog:example1", "--format", "json", "--points", "8")[1]
    doc = json.loads(out)
    assert json.dumps(doc, indent=2) + "\n" == out
    for r in doc["points"]:
        assert float(repr(r["kappa"])) == r["kappa"]


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv("CONTACT3_SEED", "7")
    env = call("verify", "catalog:example3", "--format", "json")[1]
    flag = call("verify", "catalog:example3", "--format", "json", "--seed", "7")[1]
    monkeypatch.delenv("CONTACT3_SEED")
    assert env == flag
    assert json.loads(env)["config"]["seed"] == 7
    monkeypatch.setenv("CONTACT3_SEED", "x")
    assert call("verify", "catalog:example3")[0] == 2


def _verdicts(doc):
    return [(e["name"], e["passed"]) for e in doc["entries"]]


def test_verdicts_do_not_depend_on_seed():
    a = json.loads(call("examples", "--format", "json", "--seed", "42")[1])
    b = json.loads(call("examples", "--format", "json", "--seed", "7")[1])
    assert _verdicts(a) == _verdicts(b)
    assert a["passed"] == b["passed"]
