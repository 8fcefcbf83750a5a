import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from gauge_spectral import cli
from gauge_spectral import regulated as R


def run(args):
    out, err = io.StringIO(), io.StringIO()
    status = cli.execute(cli.parse(args), out, err)
    return status, out.getvalue(), err.getvalue()


@pytest.fixture
def diag_csv(tmp_path):
    p = tmp_path / "A.csv"
    p.write_text("0.25,0,0\n0,0.5,0\n0,0,0.75\n")
    return str(p)


def test_parse_levels():
    assert cli.parse_levels("1..4") == [1, 2, 3, 4]
    assert cli.parse_levels("2,4,8") == [2, 4, 8]


def test_parse_function_specs():
    assert cli.parse_function("heaviside:0.5", (0, 1))(0.7) == 1
    assert cli.parse_function("indicator:0.2,0.4", (0, 1))(0.4) == 1
    assert cli.parse_function("point:0.3", (0, 1))(0.3) == 1
    assert cli.parse_function("thomae:4")(0.5) == 0.5
    assert cli.parse_function("const:2", (0, 1))(0.1) == 2
    assert cli.parse_function("expr:x*x", (0, 2))(1.5) == pytest.approx(2.25)


def test_parse_plan():
    plan = cli.parse(["mult-norm", "--fn", "identity", "--format", "csv"])
    assert plan.subcommand == "mult-norm" and plan.output_format == "csv"
    assert cli.parse(["apply", "--matrix", "m.csv", "--fn", "identity"]).inputs == {"matrix": "m.csv"}


def test_fmt():
    assert cli.fmt(0.5) == "0.5" and cli.fmt(1 - 2j) == "1-2j"


def test_apply_csv(diag_csv):
    status, out, _ = run(["apply", "--matrix", diag_csv, "--fn", "heaviside:0.5"])
    assert status == 0
    rows = [[complex(v.replace(" ", "")) for v in r] for r in csv.reader(io.StringIO(out))]
    assert np.allclose(np.array(rows), np.diag([0, 1, 1]))


def test_apply_piecewise_file(diag_csv, tmp_path):
    p = tmp_path / "f.json"
    p.write_text(json.dumps({"k": [0, 1], "pieces": ["x", {"const": 2}],
                             "breaks": [{"x": 0.6, "value": 9}]}))
    status, out, _ = run(["apply", "--matrix", diag_csv, "--fn", f"@{p}", "--format", "json"])
    M = np.array(json.loads(out)["matrix"])[..., 0]
    assert status == 0 and np.allclose(np.diag(M), [0.25, 0.5, 2])


def test_spectrum_map(diag_csv):
    _, out, _ = run(["spectrum-map", "--fn", "heaviside:0.5", "--model", "continuum:0,1"])
    data = json.loads(out)
    assert sorted(p[0] for p in data["points"]) == [0, 1] and data["closure_note"]
    _, out, _ = run(["spectrum-map", "--fn", "heaviside:0.6", "--matrix", diag_csv,
                     "--format", "csv"])
    assert out.splitlines() == ["re,im", "0.0,0.0", "1.0,0.0"]


def test_thomae_demo(tmp_path):
    samples = tmp_path / "s.csv"
    status, out, _ = run(["thomae-demo", "--levels", "1..6", "--samples-out", str(samples)])
    table = json.loads(out)["table"]
    diffs = [r["norm_diff_to_finest"] for r in table]
    assert status == 0 and all(b <= a for a, b in zip(diffs, diffs[1:])) and diffs[-1] == 0
    assert all(r["norm_diff_to_finest"] <= r["bound"] for r in table)
    assert samples.read_text().splitlines()[0] == "x,t_1,t_2,t_3,t_4,t_5,t_6"


def test_mult_norm():
    status, out, _ = run(["mult-norm", "--fn", "heaviside:0.5", "--grid", "0,1,128"])
    assert status == 0 and json.loads(out) == {"op_norm": 1.0, "sup_norm": 1.0}


def test_domain_test():
    _, out, _ = run(["domain-test", "--fn", "x", "--model", "geometric:0.5"])
    data = json.loads(out)
    assert data["member"] and data["value"] == pytest.approx(6)
    _, out, _ = run(["domain-test", "--fn", "x", "--model", "density:(1+x*x)**-1.5",
                     "--format", "csv"])
    rows = out.splitlines()
    assert rows[0] == "radius,partial_sum" and len(rows) > 5


def test_cauchy_solve_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"interval": [0, 1], "grid": 1, "g": "-1",
                               "datum": {"x0": "1", "forcing": "1", "horizon": 10}, "levels": [1, 2]}))
    traj = tmp_path / "u.csv"
    status, out, _ = run(["cauchy-solve", "--config", str(cfg), "--times", "0.1,1",
                          "--trajectory-out", str(traj)])
    data = json.loads(out)
    assert status == 0 and all(abs(p["u"][0] - 1) <= 1e-10 for p in data["trajectory"])
    assert data["report"]["all_ok"]
    assert traj.read_text().splitlines()[0] == "t,u_0"


def test_cauchy_solve_csv():
    status, out, _ = run(["cauchy-solve", "--demo", "heaviside", "--levels", "2,4",
                          "--times", "0,0.5,1", "--format", "csv"])
    rows = list(csv.DictReader(io.StringIO(out)))
    assert status == 0 and [r["level"] for r in rows] == ["2", "4"]
    assert all(r["ok"] == "true" for r in rows)


def test_verify_exit_zero():
    status, out, _ = run(["verify", "--seed", "42"])
    assert status == 0 and out.startswith("verify seed=42") and "14/14" in out


def test_module_error_exit_one(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,4\n")
    status, _, err = run(["apply", "--matrix", str(bad), "--fn", "identity", "--error-json"])
    assert status == 1 and json.loads(err)["error"] == "ArgumentError"
    status, _, err = run(["apply", "--matrix", str(tmp_path / "missing.csv"), "--fn", "identity"])
    assert status == 1 and err


def test_usage_error_exit_two():
    with pytest.raises(SystemExit) as info:
        cli.parse(["mult-norm", "--bogus"])
    assert info.value.code == 2


def test_out_flag(tmp_path):
    target = tmp_path / "o.json"
    status, out, _ = run(["mult-norm", "--fn", "const:3", "--out", str(target)])
    assert status == 0 and out == "" and json.loads(target.read_text())["sup_norm"] == 3


def test_verify_deterministic_subprocess():
    cmd = [sys.executable, "-m", "gauge_spectral.cli", "verify", "--seed", "7"]
    a = subprocess.run(cmd, capture_output=True)
    b = subprocess.run(cmd, capture_output=True)
    assert a.returncode == 0 and a.stdout == b.stdout and a.stdout


def test_constant_spec_is_regulated():
    assert isinstance(cli.parse_function("identity", (0, 1)), R.RegulatedFn)
