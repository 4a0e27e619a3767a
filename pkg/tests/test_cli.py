import json

import pytest

from incupdate.cli import EXIT_INCONSISTENT, EXIT_OK, EXIT_REJECTED, EXIT_USAGE, run
from incupdate.textio import format_constraint
from scenarios import D, D_PRIME, RULES, UNIVERSITY_RULES


def write_rules(path, numbers):
    path.write_text("".join(format_constraint(RULES[n - 1]) + "\n" for n in numbers), encoding="utf-8")
    return str(path)


def fact_file(path, text):
    path.write_text(text.replace(". ", ".\n"), encoding="utf-8")
    return str(path)


@pytest.fixture
def ws(tmp_path):
    rules = tmp_path / "rules.tgd"
    rules.write_text(UNIVERSITY_RULES, encoding="utf-8")
    return tmp_path, str(rules), str(tmp_path / "db.json")


def load(tmp_path, db, text, capsys=None):
    assert run(["--db", db, "load", fact_file(tmp_path / "facts.txt", text)]) == EXIT_OK
    if capsys is not None:
        capsys.readouterr()


def test_check_reports_violations(ws, capsys):
    tmp, _, db = ws
    rules = write_rules(tmp / "c6.tgd", range(1, 7))
    load(tmp, db, D, capsys)
    assert run(["--db", db, "--rules", rules, "check"]) == EXIT_INCONSISTENT
    assert capsys.readouterr().out.splitlines() == ["c3[?X=Sten, ?Y=P269]", "c5[?X=Nils]"]
    load(tmp, db, D_PRIME, capsys)
    assert run(["--db", db, "--rules", rules, "check"]) == EXIT_OK


def test_rejected_insert_leaves_snapshot_untouched(ws, capsys):
    tmp, _, db = ws
    rules = write_rules(tmp / "c9.tgd", range(1, 10))
    load(tmp, db, D_PRIME, capsys)
    before = open(db, encoding="utf-8").read()
    code = run(["--db", db, "--rules", rules, "--json", "insert", "--atoms", "Publication(P235)",
                "--delta-max", "2"])
    assert code == EXIT_REJECTED
    assert json.loads(capsys.readouterr().out)["status"] == "Rejected"
    assert open(db, encoding="utf-8").read() == before


def test_accepted_insert_rewrites_snapshot(ws, capsys):
    tmp, _, db = ws
    rules = write_rules(tmp / "c6.tgd", range(1, 7))
    load(tmp, db, D_PRIME, capsys)
    code = run(["--db", db, "--rules", rules, "insert", "--atoms", "Authors(Nils, P235)", "--delta-max", "3"])
    assert code == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "Accepted" and "+ Authors(Nils, P235)" in out
    snap = json.loads(open(db, encoding="utf-8").read())
    assert snap["degrees"] == {}
    assert {"pred": "Authors", "terms": ["Nils", "P235"]} in snap["facts"]


def test_delete_cascade_writes_empty_snapshot(ws):
    tmp, _, db = ws
    rules = write_rules(tmp / "c13.tgd", [10, 13])
    load(tmp, db, "GrantEligible(Sten). Student(Sten). Enrolled(Sten, CS).")
    req = fact_file(tmp / "req.txt", "GrantEligible(Sten).")
    assert run(["--db", db, "--rules", rules, "delete", "--atoms", req]) == EXIT_OK
    assert open(db, encoding="utf-8").read() == '{"facts":[],"degrees":{}}'


def test_stats_and_core(ws, capsys):
    tmp, _, db = ws
    load(tmp, db, "R(a, _N1). R(a, b). S(_N2).", capsys)
    assert run(["--db", db, "--json", "stats"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["facts"] == 3 and doc["nulls"] == 2
    assert run(["--db", db, "core"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[0] == "3 -> 2 facts"
    assert run(["--db", db, "core", "--full"]) == EXIT_OK


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["check"],
    ["--db", "missing.json", "stats"],
    ["insert", "--atoms", "R(a)"],
])
def test_usage_errors(argv, capsys):
    assert run(argv) == EXIT_USAGE
    assert capsys.readouterr().err


def test_bad_inputs_are_usage_errors(ws, capsys):
    tmp, rules, db = ws
    bad = tmp / "bad.txt"
    bad.write_text("R(a\n", encoding="utf-8")
    assert run(["--db", db, "load", str(bad)]) == EXIT_USAGE
    assert "1:4" in capsys.readouterr().err
    load(tmp, db, "R(a).", capsys)
    assert run(["--db", db, "--rules", rules, "insert", "--atoms", "R(a, b)", "--delta-max", "3"]) == EXIT_USAGE


def test_load_checks_arities_against_rules(ws):
    tmp, rules, db = ws
    facts = fact_file(tmp / "f.txt", "Authors(Nils).")
    assert run(["--db", db, "--rules", rules, "load", facts]) == EXIT_USAGE


def test_bench_command_prints_csv(tmp_path, capsys):
    csv = tmp_path / "out.csv"
    code = run(["bench", "--facts", "60", "--nulls", "0,5", "--sizes", "1", "--updates", "1",
                "--csv", str(csv)])
    assert code == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "scenario,facts,nulls,updateSize,op,patternsEvaluated,qcoreEvals,rewrites,wallMs"
    assert len(lines) == 1 + 2 * 2
    assert csv.read_text(encoding="utf-8").splitlines() == lines
