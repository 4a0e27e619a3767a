"""From-scratch reference procedures used as test oracles.

Nothing here touches the store's indexes or join planner: matching is a
plain nested loop over the fact list, so the oracle stays independent of
the code paths it is used to check.  Sizes are guarded because the search
is exponential.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from .store import Instance
from .terms import (
    CONST,
    NULL,
    VAR,
    Atom,
    Constraint,
    Substitution,
    Term,
    apply,
    atom_key,
    term_key,
)

MAX_CORE_ATOMS = 30
_FRESH = re.compile(r"^_N([0-9]+)$")
MAX_CANDIDATES = 10 ** 6


class OracleLimitError(RuntimeError):
    """The input is too large for an exhaustive oracle."""


class ChaseLimitError(RuntimeError):
    """A from-scratch chase was cut off by the degree bound."""


def naive_homs(atoms: Sequence[Atom], facts: Sequence[Atom],
               binding: Optional[Substitution] = None, movable=lambda t: t.kind == VAR,
               budget: Optional[list] = None) -> Iterator[Substitution]:
    """Homomorphisms from ``atoms`` into ``facts``: terms for which
    ``movable`` holds are mapped, everything else must match literally."""
    binding = dict(binding or {})
    by_pred: Dict[str, List[Atom]] = {}
    for f in facts:
        by_pred.setdefault(f.pred, []).append(f)

    def rec(i: int, b: Substitution):
        if i == len(atoms):
            yield b
            return
        a = atoms[i]
        for f in by_pred.get(a.pred, ()):
            if budget is not None:
                budget[0] -= 1
                if budget[0] < 0:
                    raise OracleLimitError("candidate budget exhausted")
            if len(f.terms) != len(a.terms):
                continue
            nb = b
            ok = True
            for s, t in zip(a.terms, f.terms):
                if movable(s):
                    cur = nb.get(s)
                    if cur is None:
                        if nb is b:
                            nb = dict(b)
                        nb[s] = t
                    elif cur != t:
                        ok = False
                        break
                elif s != t:
                    ok = False
                    break
            if ok:
                yield from rec(i + 1, nb)

    yield from rec(0, binding)


@dataclass(frozen=True)
class Violation:
    constraint: int
    binding: Tuple[Tuple[Term, Term], ...]

    def __str__(self) -> str:
        b = ", ".join(f"{v}={t}" for v, t in self.binding)
        return f"c{self.constraint + 1}[{b}]"


def is_consistent(inst: Instance | Iterable[Atom], constraints: Sequence[Constraint]) -> List[Violation]:
    """Every body match without a head extension, in a fixed order.
    An empty list means the instance satisfies all constraints."""
    facts = sorted(inst.facts if isinstance(inst, Instance) else set(inst), key=atom_key)
    out = []
    for ci, c in enumerate(constraints):
        seen = set()
        for h in naive_homs(c.body, facts):
            key = tuple(sorted(h.items(), key=lambda kv: term_key(kv[0])))
            if key in seen:
                continue
            seen.add(key)
            if next(naive_homs([c.head], facts, h), None) is None:
                out.append(Violation(ci, key))
    out.sort(key=lambda v: (v.constraint, [(term_key(a), term_key(b)) for a, b in v.binding]))
    return out


def _max_fresh(facts: Iterable[Atom]) -> int:
    top = 0
    for a in facts:
        for t in a.terms:
            m = _FRESH.match(t.name) if t.kind == NULL else None
            if m:
                top = max(top, int(m.group(1)))
    return top


def full_chase(inst: Instance, constraints: Sequence[Constraint], dmax: int,
               *, strict: bool = False) -> Instance:
    """Saturate a copy of ``inst`` by firing every constraint on the whole
    instance until nothing changes.

    Fresh nulls get degree one above the largest body null degree (0 for
    null-free bodies); firings whose head would exceed ``dmax`` are skipped,
    or raise :class:`ChaseLimitError` when ``strict``.
    """
    facts = list(inst.facts)
    present = set(facts)
    degree: Dict[Term, int] = dict(inst.degree)
    counter = _max_fresh(facts)
    changed = True
    while changed:
        changed = False
        for c in constraints:
            ext = sorted(c.existential, key=lambda t: t.name)
            for h in list(naive_homs(c.body, facts)):
                if next(naive_homs([c.head], facts, h), None) is not None:
                    continue
                body_deg = [degree.get(t, 0) for b in c.body for t in apply(h, b).terms
                            if t.kind == NULL]
                new_deg = max(body_deg) + 1 if body_deg else 0
                if ext and new_deg > dmax:
                    if strict:
                        raise ChaseLimitError(f"degree bound {dmax} reached")
                    continue
                full = dict(h)
                for v in ext:
                    counter += 1
                    n = Term(NULL, f"_N{counter}")
                    full[v] = n
                    degree[n] = new_deg
                head = apply(full, c.head)
                if head not in present:
                    present.add(head)
                    facts.append(head)
                    changed = True
    out = Instance(arities=inst.arities)
    for a in facts:
        out.add_fact(a)
    for n in out.degree:
        out.degree[n] = degree.get(n, 0)
    return out


def _connected_order(atoms: List[Atom], movable) -> List[Atom]:
    """Atoms reordered so that each one shares as many mapped terms as
    possible with those before it (ties keep the input order)."""
    rest, out, seen = list(atoms), [], set()
    while rest:
        i = max(range(len(rest)),
                key=lambda k: (sum(1 for t in rest[k].terms if movable(t) and t in seen), -k))
        a = rest.pop(i)
        out.append(a)
        seen.update(t for t in a.terms if movable(t))
    return out


def _retract_once(facts: List[Atom], frozen: Set[Term], budget: list) -> Optional[List[Atom]]:
    movable = lambda t: t.kind == NULL and t not in frozen
    # atoms without movable terms map to themselves and need no search
    mobile = _connected_order([f for f in facts if any(movable(t) for t in f.terms)], movable)
    for victim in facts:
        if not any(movable(t) for t in victim.terms):
            continue
        target = [f for f in facts if f != victim]
        for h in naive_homs(mobile, target, movable=movable, budget=budget):
            return sorted(set(apply(h, a) for a in facts), key=atom_key)
    return None


def full_core(inst: Instance | Iterable[Atom], *, frozen: Iterable[Term] = (),
              max_atoms: int = MAX_CORE_ATOMS, max_candidates: int = MAX_CANDIDATES) -> Instance:
    """Core of the instance by exhaustive retraction search.

    Repeatedly looks for an endomorphism avoiding some atom (nulls in
    ``frozen`` behave as constants) and applies it, until none exists.
    """
    facts = sorted(inst.facts if isinstance(inst, Instance) else set(inst), key=atom_key)
    if len(facts) > max_atoms:
        raise OracleLimitError(f"{len(facts)} atoms exceeds the core oracle limit of {max_atoms}")
    frozen = set(frozen)
    budget = [max_candidates]
    while True:
        nxt = _retract_once(facts, frozen, budget)
        if nxt is None:
            break
        facts = nxt
    out = Instance(arities=inst.arities if isinstance(inst, Instance) else None)
    for a in facts:
        out.add_fact(a)
    return out


def has_strict_retract(facts: Iterable[Atom], frozen: Iterable[Term] = ()) -> bool:
    facts = sorted(set(facts), key=atom_key)
    return _retract_once(facts, set(frozen), [MAX_CANDIDATES]) is not None


def instances_isomorphic(a: Instance | Iterable[Atom], b: Instance | Iterable[Atom]) -> bool:
    """Whether a bijective null renaming maps one fact set onto the other."""
    fa = set(a.facts if isinstance(a, Instance) else a)
    fb = set(b.facts if isinstance(b, Instance) else b)
    if len(fa) != len(fb):
        return False
    ground_a = {x for x in fa if not x.nulls()}
    ground_b = {x for x in fb if not x.nulls()}
    if ground_a != ground_b:
        return False
    rest_a = sorted(fa - ground_a, key=lambda x: (-len(x.nulls()), atom_key(x)))
    rest_b = fb - ground_b
    by_pred: Dict[str, List[Atom]] = {}
    for x in rest_b:
        by_pred.setdefault(x.pred, []).append(x)

    def rec(i: int, fwd: Dict[Term, Term], bwd: Dict[Term, Term], used: Set[Atom]) -> bool:
        if i == len(rest_a):
            return True
        x = rest_a[i]
        for y in by_pred.get(x.pred, ()):
            if y in used or len(y.terms) != len(x.terms):
                continue
            f2, b2 = dict(fwd), dict(bwd)
            ok = True
            for s, t in zip(x.terms, y.terms):
                if s.kind != t.kind:
                    ok = False
                    break
                if s.kind == CONST:
                    if s != t:
                        ok = False
                        break
                    continue
                if f2.setdefault(s, t) != t or b2.setdefault(t, s) != s:
                    ok = False
                    break
            if ok and rec(i + 1, f2, b2, used | {y}):
                return True
        return False

    return rec(0, {}, {}, set())
