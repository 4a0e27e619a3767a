import pytest

from incupdate.chase import Status, UpdateEngine, chase4delete, chase4insert, delete, insert
from incupdate.oracle import instances_isomorphic, is_consistent
from incupdate.store import ArityError, Instance
from incupdate.terms import Constraint, atom, const, null, var
from incupdate.textio import serialize_snapshot
from scenarios import D_PRIME, facts, instance, rules

C6 = rules(1, 2, 3, 4, 5, 6)
EX5_D = ("Authors(_N1, P2). Authors(Alice, _N2). Publication(P2). Publication(_N2). "
         "Researcher(_N1). Researcher(Alice). Supervises(_N1, _N3).")


def test_incremental_insert_fires_only_touched_rule():
    d1 = instance("Researcher(Elin). Supervises(Elin, Sten). Authors(Elin, P269).")
    out = insert(d1, rules(1, 6, 7, 8), 3, facts("Authors(Sten, P269)"))
    assert out.status is Status.ACCEPTED
    want = facts("Researcher(Elin). Supervises(Elin, Sten). Authors(Elin, P269). "
                 "Authors(Sten, P269). PhDPaper(Sten, P269, _N2).")
    assert instances_isomorphic(out.instance, want)
    assert d1.facts == set(facts("Researcher(Elin). Supervises(Elin, Sten). Authors(Elin, P269)."))


def test_delete_regenerated_with_fresh_null():
    out = delete(instance(D_PRIME), C6, 3, facts("PhDPaper(Sten, P269, 2022)"))
    assert out.status is Status.APPLIED
    d2 = instance(D_PRIME.replace("PhDPaper(Sten, P269, 2022)", "PhDPaper(Sten, P269, _N2)"))
    assert instances_isomorphic(out.instance, d2)


def test_delete_backward_through_marked_atom():
    engine = UpdateEngine(C6, 3)
    d2 = engine.delete(instance(D_PRIME), facts("PhDPaper(Sten, P269, 2022)")).instance
    phd = [f for f in d2.facts if f.pred == "PhDPaper"]
    out = engine.delete(d2, phd)
    assert const("Elin") in {t for f in out.to_del for t in f.terms}
    assert facts("Authors(Elin, P269)")[0] in out.to_del
    want = (set(d2.facts) - set(phd) - set(facts("Authors(Elin, P269)"))) | set(
        facts("Authors(Elin, _N4). Publication(_N4)."))
    assert instances_isomorphic(out.instance, want)
    assert is_consistent(out.instance, C6) == []


def test_delete_accepts_isomorphic_request():
    engine = UpdateEngine(C6, 3)
    d2 = engine.delete(instance(D_PRIME), facts("PhDPaper(Sten, P269, 2022)")).instance
    out = engine.delete(d2, facts("PhDPaper(Sten, P269, _Whatever)"))
    assert not any(f.pred == "PhDPaper" for f in out.instance.facts)


def test_divergent_insert_rejected_and_instance_untouched():
    d = instance(D_PRIME)
    snap = serialize_snapshot(d)
    out = insert(d, rules(*range(1, 10)), 2, facts("Publication(P235)"))
    assert out.status is Status.REJECTED and not out.ok
    assert out.instance is d and serialize_snapshot(d) == snap
    cites = sorted((f for f in out.to_ins if f.pred == "Cites"), key=str)
    assert len(cites) == 3
    assert out.stats["degree_cut"] == 1


def test_divergent_degrees_follow_chain():
    to_ins, deg = chase4insert(instance(D_PRIME), rules(*range(1, 10)), 2, facts("Publication(P235)"))
    chain = {f.terms[0]: f.terms[1] for f in to_ins if f.pred == "Cites"}
    first = chain[const("P235")]
    assert [deg[first], deg[chain[first]], deg[chain[chain[first]]]] == [0, 1, 2]


def test_redundant_side_effects_removed_on_insert():
    out = insert(instance(D_PRIME), C6, 3, facts("Authors(Nils, P235)"))
    want = (set(instance(D_PRIME).facts) - set(facts("Authors(Nils, _N1). Publication(_N1)."))) | set(
        facts("Authors(Nils, P235)"))
    assert out.status is Status.ACCEPTED and out.instance.facts == want
    assert out.instance.degree == {}


def test_head_already_satisfied_is_not_generated():
    out = insert(instance("Authors(Elin, P2)."), rules(5), 3, facts("Researcher(Elin)"))
    assert out.to_ins == facts("Researcher(Elin)")
    assert out.instance.facts == set(facts("Authors(Elin, P2). Researcher(Elin)."))


def test_insert_with_bucket_simplification():
    d = instance(EX5_D)
    to_ins, deg = chase4insert(d, rules(1, 3, 4, 10, 11, 12), 3, facts("Authors(Alice, P5). Student(Bob)"))
    by_pred = {f.pred: f for f in to_ins}
    assert set(by_pred) == {"Authors", "Publication", "Student", "Enrolled", "Degree", "Language"}
    enr, dg, lang = by_pred["Enrolled"], by_pred["Degree"], by_pred["Language"]
    assert deg[enr.terms[1]] == 0 and deg[dg.terms[1]] == 1 and deg[lang.terms[2]] == 2
    assert dg.terms[0] == enr.terms[1] and lang.terms[:2] == dg.terms

    out = insert(d, rules(1, 3, 4, 10, 11, 12), 3, facts("Authors(Alice, P5). Student(Bob)"))
    want = facts("Authors(_N1, P2). Authors(Alice, P5). Publication(P2). Publication(P5). Researcher(_N1). "
                 "Researcher(Alice). Supervises(_N1, _N3). Student(Bob). Enrolled(Bob, _N4). "
                 "Degree(_N4, _N5). Language(_N4, _N5, _N6).")
    assert out.status is Status.ACCEPTED
    assert len(out.instance) == 11 and instances_isomorphic(out.instance, want)
    assert set(out.instance.degree.values()) == {0}


def test_delete_cascades_to_empty_instance():
    d0 = instance("GrantEligible(Sten). Student(Sten). Enrolled(Sten, CS).")
    out = delete(d0, rules(10, 13), 3, facts("GrantEligible(Sten)"))
    assert out.status is Status.APPLIED
    assert len(out.instance) == 0 and out.to_ins == []
    got = {f for f in out.to_del if not f.nulls()}
    assert got == set(facts("GrantEligible(Sten). Student(Sten). Enrolled(Sten, CS)."))
    assert any(f.pred == "Enrolled" and f.nulls() for f in out.to_del)
    to_del, to_ins = chase4delete(d0, rules(10, 13), 3, facts("GrantEligible(Sten)"))
    assert len(to_del) == 4 and to_ins == []


def test_fresh_nulls_never_reuse_existing_names():
    d = instance("Researcher(Ann). Authors(Bob, _N1). Publication(_N1). Researcher(Bob).")
    out = insert(d, rules(5), 3, facts("Researcher(Cy)"))
    new = {t for f in out.to_ins for t in f.nulls()}
    assert new and null("N1") not in new


def test_update_arity_and_variable_checks():
    engine = UpdateEngine(C6, 3)
    with pytest.raises(ArityError):
        engine.insert(instance(D_PRIME), [atom("Authors", const("x"))])
    with pytest.raises(ValueError):
        engine.insert(instance(D_PRIME), [atom("Authors", const("x"), var("Y"))])
    clash = Constraint((atom("Authors", var("X")),), atom("Researcher", var("X")))
    with pytest.raises(ArityError):
        UpdateEngine(C6 + [clash], 3)


def test_outcome_json_shape():
    out = insert(instance(D_PRIME), C6, 3, facts("Authors(Nils, P235)"))
    doc = out.to_json()
    assert doc["status"] == "Accepted"
    assert doc["toIns"] == ["Authors(Nils, P235)"] and doc["toDel"] == []
    assert doc["stats"]["queries"] >= 1


def test_counters_are_reproducible():
    a = insert(instance(EX5_D), rules(1, 3, 4, 10, 11, 12), 3, facts("Authors(Alice, P5). Student(Bob)"))
    b = insert(instance(EX5_D), rules(1, 3, 4, 10, 11, 12), 3, facts("Authors(Alice, P5). Student(Bob)"))
    assert a.stats == b.stats and serialize_snapshot(a.instance) == serialize_snapshot(b.instance)
