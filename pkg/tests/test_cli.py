import json
import subprocess
import sys

import pytest

from lipfree.cli import CERT_FAILURE, INPUT_ERROR, NEGATIVE, OK, run


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def files(tmp_path):
    f = {}
    f["line"] = write(tmp_path / "line.json", {"n": 3, "d": [[0, 1, 2], [1, 0, 1], [2, 1, 0]]})
    f["line_perm"] = write(tmp_path / "line_perm.json", {"n": 3, "d": [[0, 2, 1], [2, 0, 1], [1, 1, 0]]})
    f["tri"] = write(tmp_path / "tri.json", {"n": 3, "d": [[0, 1, 1], [1, 0, 1], [1, 1, 0]]})
    f["bad"] = write(tmp_path / "bad.json", {"n": 2, "d": [[0, 1], [2, 0]]})
    f["mol"] = write(tmp_path / "mol.json", {"space": "line.json", "entries": {"0": 1, "2": 1, "1": -2}})
    f["mpq"] = write(tmp_path / "mpq.json", {"space": "line.json", "entries": {"0": "1/2", "2": "-1/2"}})
    f["holmes"] = write(tmp_path / "holmes.json", {"space": "line.json", "terms": [[1, 1], [-2, 2]]})
    f["extend"] = write(tmp_path / "extend.json", {"space": "line.json", "values": {"0": 0, "2": 1}})
    return f


def call(argv, capsys):
    code = run(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_validate(files, capsys):
    assert call(["validate", files["line"]], capsys) == (OK, {"valid": True, "n": 3, "violations": []})
    code, report = call(["validate", files["bad"]], capsys)
    assert code == INPUT_ERROR
    assert not report["valid"] and report["violations"]


def test_missing_file_and_usage_errors(tmp_path, capsys):
    assert run(["validate", str(tmp_path / "nope.json")]) == INPUT_ERROR
    assert run(["frobnicate"]) == INPUT_ERROR
    assert run([]) == INPUT_ERROR


def test_transform(files, capsys):
    code, report = call(["transform", files["line"], "--bound"], capsys)
    assert code == OK and report["d"][0][2] == pytest.approx(2 / 3)
    code, report = call(["transform", files["line"], "--snowflake", "0.5"], capsys)
    assert report["d"][0][2] == pytest.approx(2 ** 0.5)
    code, report = call(["transform", files["tri"], "--psi", "2"], capsys)
    assert code == OK and report["n"] == 5 and report["d"][0][4] == 4
    assert run(["transform", files["line"], "--psi", "2"]) == INPUT_ERROR
    assert run(["transform", files["line"], "--snowflake", "1.5"]) == INPUT_ERROR


def test_norm_modes(files, capsys):
    code, report = call(["norm", files["mol"]], capsys)
    assert code == OK and report["value"] == pytest.approx(2) and report["gap"] <= 1e-9
    code, report = call(["norm", files["mpq"], "--both", "--exact"], capsys)
    assert code == OK and report["value_exact"] == "1"
    code, report = call(["norm", files["mol"], "--primal"], capsys)
    assert report["value"] == pytest.approx(2)
    code, report = call(["norm", files["mol"], "--dual"], capsys)
    assert report["value"] == pytest.approx(2) and len(report["dual_witness"]) == 3


def test_norm_tolerance_zero_reports_not_crashes(tmp_path, capsys):
    space = write(tmp_path / "s.json", {"d": [[0, 0.1, 0.7], [0.1, 0, 0.65], [0.7, 0.65, 0]]})
    mol = write(tmp_path / "m.json", {"space": space, "entries": {"0": 0.3, "1": 0.4, "2": -0.7}})
    code, report = call(["norm", mol, "--tol", "0"], capsys)
    assert code in (OK, CERT_FAILURE)
    assert "certificate" in report


def test_holmes_and_extend(files, capsys):
    code, report = call(["holmes", files["holmes"]], capsys)
    assert code == OK and report["difference"] <= 1e-9
    code, report = call(["extend", files["extend"]], capsys)
    assert code == OK and report["values"] == [0, 1, 1] and report["lipschitz_constant"] <= 1


def test_isometry_and_dilatation(files, capsys):
    code, report = call(["isometry", files["line"], files["line_perm"]], capsys)
    assert code == OK and report["isometric"]
    code, report = call(["isometry", files["line"], files["tri"]], capsys)
    assert code == NEGATIVE and report["mapping"] is None
    code, report = call(["dilatation", files["line"], files["line_perm"]], capsys)
    assert code == OK and report["lam"] == pytest.approx(1)
    assert run(["isometry", files["line"], files["bad"]]) == INPUT_ERROR


def test_concave(files, capsys):
    code, report = call(["concave", files["line"]], capsys)
    assert code == NEGATIVE and not report["concave"]
    bad = [p for p in report["pairs"] if not p["extreme"]]
    assert [p["pair"] for p in bad] == [[0, 2]] and "witness" in bad[0]
    code, report = call(["concave", files["tri"], "--method", "representation", "--basepoint", "1"], capsys)
    assert code == OK and report["concave"] and report["basepoint"] == 1
    assert run(["concave", files["tri"], "--basepoint", "7"]) == INPUT_ERROR


def test_urysohn(tmp_path, capsys):
    log = tmp_path / "log.jsonl"
    code, report = call(["urysohn", "grow", "--grid", "1,2", "--rounds", "10", "--log", str(log)], capsys)
    assert code == OK and report["summary"]["points"] == 9 and report["summary"]["unrealized"] == 0
    assert len(log.read_text().splitlines()) == 8
    code, report = call(["urysohn", "grow", "--grid", "1,2", "--rounds", "10", "--budget", "3"], capsys)
    assert code == INPUT_ERROR and "budget" in report["error"]
    assert run(["urysohn", "grow", "--grid", "a,b"]) == INPUT_ERROR


def test_reduce(files, tmp_path, capsys):
    emit = tmp_path / "inst.json"
    code, report = call(["reduce", files["line"], "--emit", str(emit)], capsys)
    assert code == OK and report["n"] == 6 and report["concavity"]["concave"]
    assert json.loads(emit.read_text()) == report


def test_theorem1(files, capsys):
    code, report = call(["theorem1", files["line"], files["line_perm"]], capsys)
    assert code == OK and report["agree"]
    assert all(report["verdicts"].values())
    code, report = call(["theorem1", files["line"], files["tri"]], capsys)
    assert code == NEGATIVE and report["agree"]


def test_suite_errors_and_tolerance_zero(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run(["suite", "--corpus", str(empty)]) == INPUT_ERROR
    code, report = call(["suite", "--quick", "--only", "2,4", "--tol", "0"], capsys)
    assert code in (OK, NEGATIVE)
    assert [c["criterion"] for c in report["criteria"]] == [2, 4]


def test_suite_with_corpus(files, tmp_path, capsys):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "a.json").write_text(open(files["tri"]).read())
    code, report = call(["suite", "--quick", "--only", "2", "--corpus", str(corpus)], capsys)
    assert code == OK and report["passed"]


def test_env_defaults_and_flag_precedence(files, tmp_path, capsys, monkeypatch):
    out = tmp_path / "report.json"
    monkeypatch.setenv("LIPFREE_OUT", str(out))
    code, report = call(["isometry", files["line"], files["line_perm"]], capsys)
    assert json.loads(out.read_text()) == report
    monkeypatch.setenv("LIPFREE_BUDGET", "3")
    assert run(["urysohn", "grow", "--grid", "1,2", "--rounds", "5"]) == INPUT_ERROR
    capsys.readouterr()
    assert run(["urysohn", "grow", "--grid", "1,2", "--rounds", "5", "--budget", "100"]) == OK
    monkeypatch.setenv("LIPFREE_TOL", "oops")
    assert run(["validate", files["line"]]) == INPUT_ERROR


def test_out_write_is_atomic(files, tmp_path, capsys):
    out = tmp_path / "r.json"
    out.write_text("previous")
    assert run(["validate", files["bad"], "--out", str(out)]) == INPUT_ERROR
    assert json.loads(out.read_text())["valid"] is False
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".r.json")] == []


def test_console_script_entry_point(files):
    proc = subprocess.run(
        [sys.executable, "-m", "lipfree.cli", "isometry", files["line"], files["line_perm"]],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["isometric"]
