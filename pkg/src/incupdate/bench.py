"""Desk-scale experiment harness.

Instances are generated the way the original experiments describe: sample
``k`` facts from a synthetic universe, chase them to consistency, simplify,
then replace every null by a fresh constant.  A null-controlled variant
turns a chosen set of constants back into nulls.  Update scenarios are run
against copies of the generated instances and reported as store counters
(reproducible) plus wall times (informational only).
"""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .chase import UpdateEngine
from .simplify import simplify_instance
from .store import Instance
from .terms import CONST, NULL, VAR, Atom, Constraint, Term, atom_key, term_key

CSV_COLUMNS = ["scenario", "facts", "nulls", "updateSize", "op",
               "patternsEvaluated", "qcoreEvals", "rewrites", "wallMs"]


@dataclass(frozen=True)
class Universe:
    """Predicate signatures plus a shared constant pool ``c0 .. c{n-1}``."""

    arities: Tuple[Tuple[str, int], ...]
    weights: Tuple[float, ...]
    pool: int = 4000

    @property
    def predicates(self) -> List[str]:
        return [p for p, _ in self.arities]

    def arity(self, pred: str) -> int:
        return dict(self.arities)[pred]


def default_universe(pool: int = 4000) -> Universe:
    """Twenty predicates of arity 1 to 4; lower-numbered ones are more frequent."""
    rng = np.random.default_rng(20)
    arities = tuple((f"R{i:02d}", int(a)) for i, a in enumerate(rng.integers(1, 5, size=20)))
    w = 1.0 / np.arange(1, 21)
    return Universe(arities, tuple(float(x) for x in w / w.sum()), pool)


def default_rules(universe: Optional[Universe] = None, count: int = 10, seed: int = 7) -> List[Constraint]:
    """Random rules whose head predicate always ranks above every body
    predicate, so the chase terminates.  Some heads carry an existential."""
    universe = universe or default_universe()
    rng = np.random.default_rng(seed)
    preds = universe.arities
    rules: List[Constraint] = []
    while len(rules) < count:
        hi = int(rng.integers(2, len(preds)))
        n_body = int(rng.integers(1, 3))
        body_idx = sorted(int(i) for i in rng.choice(hi, size=n_body, replace=False))
        body: List[Atom] = []
        pool: List[Term] = []
        for bi in body_idx:
            name, ar = preds[bi]
            terms = []
            for j in range(ar):
                # second body atom reuses a variable so the rule is a join
                if body and j == 0 and pool:
                    terms.append(pool[int(rng.integers(len(pool)))])
                else:
                    v = Term(VAR, f"X{len(pool)}")
                    pool.append(v)
                    terms.append(v)
            body.append(Atom(name, tuple(terms)))
        hname, har = preds[hi]
        head_terms = []
        existential = bool(rng.random() < 0.4)
        for j in range(har):
            if existential and j == har - 1:
                head_terms.append(Term(VAR, "Z"))
            else:
                head_terms.append(pool[int(rng.integers(len(pool)))])
        rules.append(Constraint(tuple(body), Atom(hname, tuple(head_terms)), 0, f"r{len(rules) + 1}"))
    return rules


def sample_facts(universe: Universe, k: int, rng: np.random.Generator,
                 prefix: str = "c", pool: Optional[int] = None) -> List[Atom]:
    pool = universe.pool if pool is None else pool
    preds = rng.choice(len(universe.arities), size=k, p=np.asarray(universe.weights))
    out = []
    for pi in preds:
        name, ar = universe.arities[int(pi)]
        consts = rng.integers(0, pool, size=ar)
        out.append(Atom(name, tuple(Term(CONST, f"{prefix}{int(c)}") for c in consts)))
    return out


def denull(inst: Instance) -> Instance:
    """Replace every null by a fresh constant ``k<i>``."""
    mapping = {n: Term(CONST, f"k{i}") for i, n in enumerate(sorted(inst.nulls(), key=term_key))}
    out = Instance(arities=inst.arities, stats=inst.stats)
    for a in inst.sorted_facts():
        out.add_fact(Atom(a.pred, tuple(mapping.get(t, t) for t in a.terms)))
    return out


def null_out(inst: Instance, constants: Sequence[Term], simplify: bool = True) -> Instance:
    """Replace each constant in ``constants`` by its own null ``_M<i>``
    (degree 0), then simplify around the new nulls."""
    mapping = {c: Term(NULL, f"_M{i}") for i, c in enumerate(constants)}
    out = Instance(arities=inst.arities, stats=inst.stats)
    for a in inst.sorted_facts():
        out.add_fact(Atom(a.pred, tuple(mapping.get(t, t) for t in a.terms)))
    if simplify and mapping:
        simplify_instance(out, out.nulls())
    return out


def pick_null_constants(inst: Instance, count: int, seed: int, *, block_cap: int = 3,
                        exclude: Iterable[Term] = ()) -> List[Term]:
    """Up to ``count`` constants to turn into nulls, taken greedily from a
    seeded permutation.

    A constant is skipped when nulling it would link more than
    ``block_cap`` nulls into one block, or when some atom containing it
    would then agree with another atom on all remaining constant positions
    (that atom would become redundant and vanish on simplification).
    Prefixes of the result are themselves valid picks, so families built
    from it are nested and keep the requested null counts exactly.
    """
    exclude = set(exclude)
    consts = sorted({t for a in inst.facts for t in a.terms
                     if t.kind == CONST and t not in exclude}, key=term_key)
    occurs: Dict[Term, List[Atom]] = {c: [] for c in consts}
    by_pos: Dict[Tuple[str, int, Term], List[Atom]] = {}
    for a in inst.sorted_facts():
        for i, t in enumerate(a.terms):
            by_pos.setdefault((a.pred, i, t), []).append(a)
        for t in set(a.terms):
            if t in occurs:
                occurs[t].append(a)
    parent: Dict[Term, Term] = {}
    size: Dict[Term, int] = {}

    def find(x: Term) -> Term:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def would_collapse(c: Term) -> bool:
        for a in occurs[c]:
            fixed = [(i, t) for i, t in enumerate(a.terms) if t != c and t not in parent]
            if fixed:
                i, t = fixed[0]
                cands = by_pos[(a.pred, i, t)]
            else:
                cands = inst.pred_index[a.pred]
            if any(b != a and all(b.terms[i] == t for i, t in fixed) for b in cands):
                return True
        return False

    chosen: List[Term] = []
    rng = np.random.default_rng(seed)
    for i in rng.permutation(len(consts)):
        if len(chosen) >= count:
            break
        c = consts[int(i)]
        roots = {find(t) for a in occurs[c] for t in a.terms if t in parent}
        if 1 + sum(size[r] for r in roots) > block_cap or would_collapse(c):
            continue
        parent[c] = c
        size[c] = 1 + sum(size[r] for r in roots)
        for r in roots:
            parent[r] = c
        chosen.append(c)
    return chosen


def generate_instance(k: int, rules: Sequence[Constraint], seed: int, null_fraction: float = 0.0,
                      *, universe: Optional[Universe] = None, dmax: int = 30,
                      max_retries: int = 5, block_cap: int = 3) -> Instance:
    """Random consistent, null-controlled instance.

    ``k`` facts are sampled and inserted through the update engine (a chase
    to consistency followed by simplification); all nulls are then replaced
    by constants and a ``null_fraction`` share of the distinct constants is
    turned back into nulls.  A rejected chase is retried with a new seed.
    """
    if not 0.0 <= null_fraction <= 1.0:
        raise ValueError("null_fraction must be within [0, 1]")
    universe = universe or default_universe()
    engine = UpdateEngine(rules, dmax)
    for attempt in range(max_retries):
        rng = np.random.default_rng([seed, attempt])
        facts = sample_facts(universe, k, rng)
        out = engine.insert(Instance(arities=engine.arities), facts)
        if out.ok:
            break
    else:
        raise RuntimeError(f"no consistent instance within {max_retries} attempts (dmax={dmax})")
    inst = denull(out.instance)
    inst.stats.clear()
    if null_fraction > 0:
        n_consts = len({t for a in inst.facts for t in a.terms if t.kind == CONST})
        picks = pick_null_constants(inst, round(null_fraction * n_consts), seed, block_cap=block_cap)
        inst = null_out(inst, picks)
        inst.stats.clear()
    return inst


@dataclass
class BenchConfig:
    facts: int = 1500
    null_counts: Tuple[int, ...] = (0, 50, 100, 500, 1000)
    update_sizes: Tuple[int, ...] = (1, 5, 10, 20)
    updates_per_size: int = 2
    seed: int = 0
    dmax: int = 30
    block_cap: int = 3
    rule_count: int = 10


@dataclass
class BenchRow:
    scenario: str
    facts: int
    nulls: int
    updateSize: int
    op: str
    patternsEvaluated: int
    qcoreEvals: int
    rewrites: int
    wallMs: float
    counters: Dict[str, int] = field(default_factory=dict)


@dataclass
class BenchReport:
    config: BenchConfig
    rows: List[BenchRow]

    def per_family(self, metric: str = "patternsEvaluated") -> List[Tuple[int, float]]:
        """Mean of ``metric`` per update, one point per family, by null count."""
        groups: Dict[str, List[BenchRow]] = {}
        for r in self.rows:
            groups.setdefault(r.scenario, []).append(r)
        pts = [(rows[0].nulls, float(np.mean([getattr(r, metric) for r in rows])))
               for rows in groups.values()]
        return sorted(pts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([getattr(r, c) if c != "wallMs" else f"{r.wallMs:.3f}" for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"config": asdict(self.config), "rows": [asdict(r) for r in self.rows]}
        return json.dumps(doc, indent=2, sort_keys=True)


def update_requests(universe: Universe, sizes: Sequence[int], per_size: int,
                    seed: int) -> List[List[Atom]]:
    """Insert requests over a reserved constant pool (``u0..u49``) that the
    generator never uses, so every family sees exactly the same updates."""
    out = []
    for s in sizes:
        for rep in range(per_size):
            rng = np.random.default_rng([seed, s, rep, 1])
            out.append(sample_facts(universe, s, rng, prefix="u", pool=50))
    return out


def _row(scenario: str, inst: Instance, size: int, op: str, stats: Dict[str, int], ms: float) -> BenchRow:
    return BenchRow(scenario, len(inst), len(inst.degree), size, op, stats.get("queries", 0),
                    stats.get("qcore_evals", 0), stats.get("rewrites", 0), ms, dict(sorted(stats.items())))


def run_family(name: str, base: Instance, rules: Sequence[Constraint], dmax: int,
               requests: Sequence[Sequence[Atom]]) -> List[BenchRow]:
    """Each request is inserted into a copy of ``base`` and then deleted
    again from the result; both operations are reported."""
    rows = []
    for req in requests:
        engine = UpdateEngine(rules, dmax)
        start = base.copy()
        start.stats = type(start.stats)()
        t0 = time.perf_counter()
        ins = engine.insert(start, req)
        t1 = time.perf_counter()
        rows.append(_row(name, base, len(req), "insert", ins.stats, (t1 - t0) * 1e3))
        t0 = time.perf_counter()
        dele = engine.delete(ins.instance, req)
        t1 = time.perf_counter()
        rows.append(_row(name, base, len(req), "delete", dele.stats, (t1 - t0) * 1e3))
    return rows


def build_families(config: BenchConfig, universe: Optional[Universe] = None,
                   rules: Optional[Sequence[Constraint]] = None) -> Dict[int, Instance]:
    """Nested null-controlled instances, keyed by requested null count."""
    universe = universe or default_universe()
    rules = list(rules) if rules is not None else default_rules(universe, config.rule_count)
    base = generate_instance(config.facts, rules, config.seed, 0.0, universe=universe, dmax=config.dmax)
    picks = pick_null_constants(base, max(config.null_counts), config.seed, block_cap=config.block_cap)
    fams = {}
    for n in config.null_counts:
        fam = null_out(base, picks[:n])
        fam.stats.clear()
        fams[n] = fam
    return fams


def bench(config: Optional[BenchConfig] = None, universe: Optional[Universe] = None,
          rules: Optional[Sequence[Constraint]] = None) -> BenchReport:
    config = config or BenchConfig()
    universe = universe or default_universe()
    rules = list(rules) if rules is not None else default_rules(universe, config.rule_count)
    requests = update_requests(universe, config.update_sizes, config.updates_per_size, config.seed)
    rows: List[BenchRow] = []
    for n, fam in build_families(config, universe, rules).items():
        rows.extend(run_family(f"nulls-{n}", fam, rules, config.dmax, requests))
    return BenchReport(config, rows)


def linear_fit_ratio(points: Sequence[Tuple[float, float]]) -> Tuple[np.ndarray, List[float]]:
    """Least-squares line through ``points`` and each point's ratio to it."""
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    coef = np.polyfit(x, y, 1)
    fit = np.polyval(coef, x)
    return coef, [float(a / b) if b > 0 else float("inf") for a, b in zip(y, fit)]
