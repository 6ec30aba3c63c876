import json
import subprocess
import sys

import pytest

from qtoroidal.cli import exit_status, main, parse_selector, validate_report, UsageError


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_skipped_only_exits_zero(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, _ = run(["verify", "--n", "2", "--N", "2", "--relations", "2.5,2.10", "--output", str(out)], capsys)
    assert code == 0
    rep = json.loads(out.read_text())
    assert validate_report(rep) == []
    assert {e["status"] for e in rep["entries"]} == {"SKIPPED"}


def test_verify_bad_rank_is_config_error(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, err = run(["verify", "--n", "1", "--output", str(out)], capsys)
    assert code == 2 and "n must be" in err
    assert not out.exists()


def test_verify_fail_exit_code(capsys):
    # the literal K reading breaks (2.4) on the short node
    code, out, _ = run(["verify", "--N", "2", "--relations", "2.4", "--window", "-1..1", "--truncation", "1",
                        "--k-convention", "q_i", "--format", "text"], capsys)
    assert code == 1 and "FAIL 2.4" in out


def test_config_file_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("n: 3\nN: 2\nrelations: [SERRE-POLY]\nwindow: '-1..1'\n", encoding="utf-8")
    out = tmp_path / "r.json"
    code, _, _ = run(["verify", "--config", str(cfg), "--n", "2", "--output", str(out)], capsys)
    rep = json.loads(out.read_text())
    assert code == 0
    assert rep["config"]["n"] == 2 and rep["config"]["N"] == 2
    assert rep["config"]["window"] == ["-1", "1"]


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("- just\n- a list\n", encoding="utf-8")
    code, _, _ = run(["verify", "--config", str(cfg)], capsys)
    assert code == 2


def test_usage_error(capsys):
    code, _, _ = run(["frobnicate"], capsys)
    assert code == 2


def test_ope_z_pair(capsys):
    code, out, _ = run(["ope", "Z+,i=1,s=1", "Z-,i=1,s=1"], capsys)
    assert code == 0
    assert "(z - w)^-1" in out and "matches" in out


def test_ope_cross_direction_trivial(capsys):
    code, out, _ = run(["ope", "Xeps+,i=0,eps=1,s=1", "Xeps+,i=0,eps=-1,s=2"], capsys)
    assert code == 0 and "normal-ordered outright" in out


def test_ope_long_node_plus_minus(capsys):
    code, out, _ = run(["ope", "Xeps+,i=0,eps=1,s=1", "Xlong-,i=0,s=1"], capsys)
    assert code == 0 and "4.12" in out and "matches" in out


def test_ope_bad_selector(capsys):
    code, _, err = run(["ope", "W+,i=1", "Z-,i=1"], capsys)
    assert code == 2 and "selector" in err


def test_selector_parsing():
    assert parse_selector("Xeps+,i=1,eps=-1,s=2") == ("Xeps", 1, {"i": 1, "eps": -1, "s": 2})
    assert parse_selector("Xlong-,i=0") == ("Xlong-", -1, {"i": 0, "s": 1})
    with pytest.raises(UsageError):
        parse_selector("Z+,s=1")


def test_identity(capsys):
    code, out, _ = run(["identity"], capsys)
    assert code == 0 and out.count("PASS") == 5
    code, out, _ = run(["identity", "--v1"], capsys)
    assert code == 0 and out.count("PASS") == 2
    code, _, _ = run(["identity", "--arity", "2"], capsys)
    assert code == 2


def test_exit_status_is_function_of_report():
    rep = {"entries": [{"relation": "2.2", "status": "PASS"}, {"relation": "2.5", "status": "SKIPPED"}]}
    assert exit_status(rep) == 0
    rep["entries"].append({"relation": "2.4", "status": "FAIL"})
    assert exit_status(rep) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qtoroidal", "identity"], capture_output=True, text=True)
    assert res.returncode == 0
