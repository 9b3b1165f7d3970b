import csv
import io
import json

import pytest

from levy_ruin.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_psi_critical_row(capsys):
    code, out, _ = run(capsys, "psi", "--claims", "exp:1", "--lambda", "1", "--premium", "2", "--beta", "0.5")
    assert code == 0
    assert out.splitlines()[0] == "beta,psi,regime"
    r = rows(out)[0]
    assert float(r["psi"]) == 0.0 and r["regime"] == "critical"


def test_psi_beyond_abscissa_exits_2(capsys):
    code, _, err = run(capsys, "psi", "--claims", "exp:1", "--premium", "2", "--beta", "1.5")
    assert code == 2 and "outside the MGF domain" in err


def test_bad_claims_spec_exits_2(capsys):
    code, _, err = run(capsys, "psi", "--claims", "gamma:2", "--premium", "2")
    assert code == 2 and "claims must be" in err


def test_estimate_b_subordinator_and_determinism(capsys, tmp_path):
    args = ["estimate-b", "--claims", "tpareto:1,2.5,1", "--premium", "0", "--alpha", "1",
            "--horizon", "1", "--replicas", "20000", "--seed", "3"]
    code, first, _ = run(capsys, *args)
    assert code == 0
    assert first.splitlines()[0] == "method,T,alpha,value,std_error,seed,consistent"
    table = rows(first)
    assert [r["method"] for r in table] == ["quadrature", "exp-time", "laplace"]
    assert all(r["consistent"] == "true" for r in table)
    _, second, _ = run(capsys, *args, "--threads", "3")
    assert first == second


def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# model\nclaims = exp:1\nlambda = 1\npremium = 3\nbeta = 0.5\n")
    code, out, _ = run(capsys, "psi", "--config", str(cfg), "--premium", "2")
    assert code == 0 and rows(out)[0]["regime"] == "critical"


def test_ruin_reason_codes(capsys):
    code, out, _ = run(capsys, "ruin", "--claims", "exp:1", "--premium", "2", "--horizon", "5",
                       "--level", "3", "--replicas", "20000")
    assert code == 0
    r = rows(out)[0]
    assert r["segerdahl"] and r["ce_approx"] == ""
    assert "asymptotic not justified" in r["reasons"]
    code, out, _ = run(capsys, "ruin", "--claims", "tpareto:1,2,1", "--premium", "2", "--horizon", "2",
                       "--level-grid", "4,8", "--replicas", "50000")
    table = rows(out)
    assert code == 0 and all(r["segerdahl"] == "" and "no Lundberg root" in r["reasons"] for r in table)
    assert float(table[1]["ratio"]) > float(table[0]["ratio"])


def test_jsonl_mirror(capsys, tmp_path):
    mirror = tmp_path / "psi.jsonl"
    run(capsys, "psi", "--claims", "exp:1", "--premium", "2", "--beta", "0.25,0.5", "--jsonl", str(mirror))
    lines = [json.loads(x) for x in mirror.read_text().splitlines()]
    assert [x["regime"] for x in lines] == ["subcritical", "critical"]


def test_conditioned_grid_cache_reuse(capsys, caplog, tmp_path):
    cache = tmp_path / "grid.npz"
    args = ["conditioned", "--claims", "tpareto:1,2,1", "--premium", "2", "--horizon", "0.25",
            "--samples", "300", "--grid-replicas", "5000", "--reference-replicas", "20000",
            "--level", "4", "--grid-cache", str(cache), "--out", str(tmp_path / "s.csv")]
    code, summary, _ = run(capsys, *args)
    assert code == 0 and "building passage grid" in caplog.text and cache.exists()
    caplog.clear()
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "tau,tau0,overshoot,prejump,w0"
    stats = {r["statistic"]: r["value"] for r in rows(summary)}
    assert "ks_time_vs_B_ratio" in stats and "ks_overshoot_vs_reference" in stats
    code, summary2, _ = run(capsys, *args)
    assert code == 0 and "grid build skipped" in caplog.text and summary2 == summary
    assert "building passage grid" not in caplog.text


def test_validate_fault_injection_exit_4(capsys, tmp_path):
    report = tmp_path / "r.json"
    code, out, _ = run(capsys, "validate", "--only", "11", "--inject-fault", "--report", str(report))
    assert code == 4
    assert out.splitlines()[0] == "criterion,target,observed,tolerance,pass"
    data = json.loads(report.read_text())
    assert data["all_pass"] is False
    assert set(data["rows"][0]) == {"criterion", "target", "observed", "tolerance", "pass"}
    code, _, _ = run(capsys, "validate", "--only", "11,12")
    assert code == 0
