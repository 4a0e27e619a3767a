"""Seeded random generators shared by the property and acceptance tests."""
import itertools
import random

from incupdate.store import Instance
from incupdate.terms import CONST, NULL, VAR, Atom, Constraint, Term, compose, normalize

SCHEMA = {"A": 1, "B": 1, "R": 2, "S": 2, "T": 3}
CONSTS = [Term(CONST, c) for c in "abcd"]


def rand_nulls(k):
    return [Term(NULL, f"_n{i}") for i in range(1, k + 1)]


def rand_atom(rng, terms, schema=SCHEMA):
    p = rng.choice(sorted(schema))
    return Atom(p, tuple(rng.choice(terms) for _ in range(schema[p])))


def rand_facts(rng, n, n_nulls=3, n_consts=3, schema=SCHEMA):
    terms = CONSTS[:n_consts] + rand_nulls(n_nulls)
    return list(dict.fromkeys(rand_atom(rng, terms, schema) for _ in range(n)))


def rand_instance(rng, n, **kw):
    return Instance(rand_facts(rng, n, **kw))


def rand_rule(rng, schema=SCHEMA, max_body=2):
    vs = [Term(VAR, f"X{i}") for i in range(4)]
    body = []
    used = []
    for _ in range(rng.randint(1, max_body)):
        p = rng.choice(sorted(schema))
        terms = []
        for _ in range(schema[p]):
            # prefer already used variables so bodies are joins
            v = rng.choice(used) if used and rng.random() < 0.6 else rng.choice(vs)
            terms.append(v)
            used.append(v)
        body.append(Atom(p, tuple(terms)))
    hp = rng.choice(sorted(schema))
    z = Term(VAR, "Z")
    head = tuple(z if rng.random() < 0.3 else rng.choice(used) for _ in range(schema[hp]))
    return Constraint(tuple(body), Atom(hp, head), rng.randrange(len(body)))


def rand_rules(rng, k=None, **kw):
    return [rand_rule(rng, **kw) for _ in range(k if k is not None else rng.randint(1, 10))]


def rand_pattern(rng, n_atoms, terms, schema=SCHEMA):
    vs = [Term(VAR, f"x{i}") for i in range(4)]
    pool = vs + terms
    return [rand_atom(rng, pool, schema) for _ in range(n_atoms)]


def brute_force_answers(atoms, inst):
    """Every assignment of the pattern variables to instance terms whose
    image lies in the instance: plain enumeration, no joins."""
    vs = sorted({t for a in atoms for t in a.terms if t.kind == VAR})
    domain = sorted({t for f in inst.facts for t in f.terms})
    out = set()
    for values in itertools.product(domain, repeat=len(vs)):
        h = dict(zip(vs, values))
        if all(Atom(a.pred, tuple(h.get(t, t) for t in a.terms)) in inst.facts for a in atoms):
            out.add(tuple(sorted(h.items())))
    return out


def naive_linked_null(facts, n):
    """LinkedNull as the literal fix-point of the level sequence."""
    level = {a for a in facts if n in a.terms}
    while True:
        nxt = {a for a in facts if any(set(a.nulls()) & set(b.nulls()) for b in level)}
        nxt |= level
        if nxt == level:
            return level
        level = nxt


def monoid_rows(rng, p, n_rigid=2, gens=3, max_rows=64):
    """Rows of a random composition-closed set of maps over ``p`` block
    nulls (identity included), as an answer table of a block query would
    be: the set of P-homomorphisms is closed under composition."""
    block = rand_nulls(p)
    rigid = [Term(CONST, f"k{i}") for i in range(n_rigid)]
    targets = block + rigid
    gens_maps = []
    for _ in range(gens):
        gens_maps.append(normalize({n: rng.choice(targets) for n in block}))
    maps = {tuple(block): {}}
    frontier = [{}]
    while frontier:
        cur = frontier.pop()
        for g in gens_maps:
            h = compose(cur, g)
            key = tuple(h.get(n, n) for n in block)
            if key not in maps:
                if len(maps) >= max_rows:
                    return None
                maps[key] = h
                frontier.append(h)
    tail = [k for k in maps if k != tuple(block)]
    rng.shuffle(tail)
    return block, [tuple(block)] + tail
