import csv
import io

import numpy as np
import pytest

from incupdate.bench import (
    CSV_COLUMNS,
    BenchConfig,
    bench,
    build_families,
    default_rules,
    default_universe,
    generate_instance,
    linear_fit_ratio,
    null_out,
    pick_null_constants,
    update_requests,
)
from incupdate.oracle import is_consistent
from incupdate.store import linked_null
from incupdate.textio import serialize_snapshot

UNI = default_universe()
RULES = default_rules(UNI)
SMALL = BenchConfig(facts=150, null_counts=(0, 5, 20), update_sizes=(1, 3), updates_per_size=1)


def test_rules_are_acyclic_and_typed():
    rank = {p: i for i, p in enumerate(UNI.predicates)}
    assert len(RULES) == 10
    for c in RULES:
        assert all(rank[c.head.pred] > rank[b.pred] for b in c.body)
        assert all(UNI.arity(a.pred) == a.arity for a in (*c.body, c.head))


def test_generated_instance_is_consistent_and_null_free():
    inst = generate_instance(150, RULES, seed=1)
    assert not inst.nulls()
    assert is_consistent(inst, RULES) == []


def test_generation_is_seeded():
    a = generate_instance(120, RULES, seed=3, null_fraction=0.1)
    b = generate_instance(120, RULES, seed=3, null_fraction=0.1)
    assert serialize_snapshot(a) == serialize_snapshot(b)
    c = generate_instance(120, RULES, seed=4, null_fraction=0.1)
    assert serialize_snapshot(a) != serialize_snapshot(c)
    with pytest.raises(ValueError):
        generate_instance(10, RULES, seed=0, null_fraction=1.5)


def test_null_out_respects_block_cap():
    inst = generate_instance(150, RULES, seed=2)
    picks = pick_null_constants(inst, 40, seed=2, block_cap=3)
    out = null_out(inst, picks)
    assert len(out.nulls()) == len(picks)
    for n in out.nulls():
        assert len(linked_null(out, n)[1]) <= 3


def test_families_are_nested_with_exact_null_counts():
    fams = build_families(SMALL, UNI, RULES)
    assert sorted(fams) == [0, 5, 20]
    assert [len(f.nulls()) for f in fams.values()] == [0, 5, 20]
    assert len({len(f) for f in fams.values()}) == 1
    assert fams[5].nulls() <= fams[20].nulls()


def test_update_requests_are_shared_and_fresh():
    reqs = update_requests(UNI, (1, 3), 2, seed=0)
    assert [len(r) for r in reqs] == [1, 1, 3, 3]
    assert all(t.name.startswith("u") for r in reqs for a in r for t in a.terms)
    assert reqs == update_requests(UNI, (1, 3), 2, seed=0)


def test_bench_report_shape():
    report = bench(SMALL, UNI, RULES)
    assert len(report.rows) == 3 * 2 * 2
    rows = list(csv.reader(io.StringIO(report.to_csv())))
    assert rows[0] == CSV_COLUMNS and len(rows) == 13
    assert all(r.patternsEvaluated > 0 for r in report.rows)
    pts = report.per_family()
    assert [n for n, _ in pts] == [0, 5, 20]


def test_null_free_family_needs_no_simplification():
    full = [c for c in RULES if not c.existential]
    report = bench(BenchConfig(facts=150, null_counts=(0,), update_sizes=(1, 3), updates_per_size=1),
                   UNI, full)
    assert report.rows and all(r.qcoreEvals == 0 for r in report.rows)


def test_counters_do_not_depend_on_run():
    strip = lambda rep: [(r.scenario, r.op, r.updateSize, r.counters) for r in rep.rows]
    assert strip(bench(SMALL, UNI, RULES)) == strip(bench(SMALL, UNI, RULES))


def test_linear_fit_ratio():
    coef, ratios = linear_fit_ratio([(0, 1.0), (1, 3.0), (2, 5.0)])
    assert np.allclose(coef, [2.0, 1.0]) and np.allclose(ratios, 1.0)
