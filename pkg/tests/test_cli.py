import json
import subprocess
import sys
from fractions import Fraction as F
from pathlib import Path

import pytest

from percentile.cli import main
from percentile.graph import contract_mecs
from percentile.io import parse_model, parse_rational
from percentile.reach import check_flow_certificate

FIX = Path(__file__).resolve().parent.parent / "fixtures"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def fx(name):
    return FIX / name


def test_fixture_files_match_index():
    index = json.loads((FIX / "index.json").read_text())
    assert "switch" in index and index["coin"]["boundary"]["expected"] == "unknown"


@pytest.mark.parametrize("model,query,code", [
    ("switch", "limsup", 0), ("switch", "mp_inf_joint", 1), ("coin", "boundary", 2),
    ("route", "disjunction", 0), ("split", "cheap_more", 1),
])
def test_solve_exit_codes(capsys, model, query, code):
    rc, out = run(capsys, "solve", fx(model + ".model.json"), fx("%s.%s.query.json" % (model, query)), "--json")
    assert rc == code
    doc = json.loads(out.out)
    assert doc["status"] == {0: "yes", 1: "no", 2: "unknown"}[code]


def test_unknown_reports_half_epsilon(capsys):
    rc, out = run(capsys, "solve", fx("coin.model.json"), fx("coin.boundary.query.json"), "--json")
    assert json.loads(out.out)["suggested_epsilon"] == "1/16"


def test_disjunction_uses_second_block(capsys):
    rc, out = run(capsys, "solve", fx("route.model.json"), fx("route.disjunction.query.json"), "--json")
    cert = json.loads(out.out)["certificate"]
    assert cert["disjunct"] == 1 and cert["disjuncts"] == ["no", "yes"]


def test_limsup_strategy_export_and_exact_verify(capsys, tmp_path):
    s = tmp_path / "s.json"
    rc, _ = run(capsys, "solve", fx("switch.model.json"), fx("switch.limsup.query.json"), "--strategy-out", s)
    assert rc == 0
    doc = json.loads(s.read_text())
    assert doc["memory_size"] == 1
    rc, out = run(capsys, "verify", fx("switch.model.json"), s, fx("switch.limsup.query.json"))
    assert rc == 0 and "prob 1" in out.out


def test_nested_verify_reports_exact_values(capsys, tmp_path):
    s = tmp_path / "n.json"
    run(capsys, "solve", fx("nested2.model.json"), fx("nested2.tight.query.json"), "--strategy-out", s)
    rc, out = run(capsys, "verify", fx("nested2.model.json"), s, fx("nested2.tight.query.json"), "--json")
    assert rc == 0
    checks = json.loads(out.out)["disjuncts"][0]["checks"]
    assert [c["lower"] for c in checks] == ["1/3", "2/3"]


def test_wrong_strategy_fails_and_names_constraint(capsys, tmp_path):
    s = tmp_path / "s.json"
    run(capsys, "solve", fx("switch.model.json"), fx("switch.liminf.query.json"), "--strategy-out", s)
    rc, out = run(capsys, "verify", fx("switch.model.json"), s, fx("switch.limsup.query.json"), "--json")
    # the liminf witness commits to one loop: limsup >= 1 holds with probability 1/2 per dimension
    assert rc == 1
    assert json.loads(out.out)["disjuncts"][0]["failing"]


def test_simulate_relaxed_mean_payoff(capsys, tmp_path):
    s = tmp_path / "s.json"
    rc, _ = run(capsys, "solve", fx("switch.model.json"), fx("switch.mp_inf_relaxed.query.json"), "--strategy-out", s)
    assert rc == 0
    relaxed = tmp_path / "q.json"
    relaxed.write_text(json.dumps({"payoff": "mp_inf", "disjuncts": [json.loads(s.read_text())["meets"]]}))
    rc, out = run(capsys, "simulate", fx("switch.model.json"), s, relaxed, "--episodes", 2000, "--horizon", 400,
                  "--json")
    doc = json.loads(out.out)
    assert rc == 0 and doc["consistent"]
    assert all(e["value_slack"] >= 0 for e in doc["estimates"])


def test_certificate_revalidates(capsys, tmp_path):
    c = tmp_path / "c.json"
    run(capsys, "solve", fx("switch.model.json"), fx("switch.limsup.query.json"), "--certificate-out", c)
    cert = json.loads(c.read_text())
    mdp = parse_model(fx("switch.model.json"))
    flow = {(s, a): parse_rational(v) for (s, a), v in cert["flow"]}
    reach = {int(t): parse_rational(v) for t, v in cert["reach"].items()}
    con = contract_mecs(mdp)
    assert check_flow_certificate(con.mdp, 0, cert["targets"], [1, 1], flow, reach) == []


def test_mec_and_formats(capsys):
    rc, out = run(capsys, "mec", fx("switch.model.json"), "--json")
    assert rc == 0 and json.loads(out.out)["mecs"] == [{"s": ["loop", "go"], "t": ["loop", "go"]}]
    rc, out = run(capsys, "formats", "model")
    assert rc == 0 and "dimensions" in json.loads(out.out)


def test_usage_and_data_errors(capsys, tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["solve"])
    assert e.value.code == 64
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dimensions": 1, "states": ["a"], "initial": "a",
                               "actions": [{"from": "a", "name": "x", "weights": [0],
                                            "to": [{"state": "a", "prob": "2/3"}]}]}))
    rc, out = run(capsys, "mec", bad)
    assert rc == 65 and "actions[0].to" in out.err
    rc, out = run(capsys, "solve", fx("coin.model.json"), fx("coin.yes.query.json"), "--epsilon", "0")
    assert rc == 65


def test_negative_weight_truncated_sum_is_a_data_error(capsys, tmp_path):
    q = tmp_path / "q.json"
    q.write_text(json.dumps({"payoff": "truncated_sum", "disjuncts": [[{"dim": 1, "value": 0, "prob": 1,
                                                                          "target": ["s"]}]]}))
    rc, out = run(capsys, "solve", fx("coin.model.json"), q)
    assert rc == 65 and "undecidable" in out.err


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "percentile.cli", "formats", "query"], capture_output=True, text=True)
    assert out.returncode == 0 and "disjuncts" in out.stdout
