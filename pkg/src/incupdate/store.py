"""Indexed fact store and native query engine.

An :class:`Instance` keeps a set of facts together with a predicate index,
a per-position term index (used to seed joins from known constants and
nulls), a null adjacency index and the null degree map.  Every query entry
point bumps a counter in ``Instance.stats`` so callers can measure how much
work an update performed.
"""
from __future__ import annotations

from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from .terms import (
    CONST,
    NULL,
    VAR,
    Atom,
    Substitution,
    Term,
    apply,
    atom_key,
    iso_signature,
    term_key,
)


class ArityError(ValueError):
    """A predicate was used with two different arities."""


class Instance:
    """Set of facts plus indexes and the null degree map.

    Copies made with :meth:`copy` share the ``stats`` counter so that work
    done on scratch copies is charged to the same session.
    """

    def __init__(self, facts: Iterable[Atom] = (), *, arities: Optional[Dict[str, int]] = None,
                 stats: Optional[Counter] = None):
        self.facts: Set[Atom] = set()
        self.degree: Dict[Term, int] = {}
        self.pred_index: Dict[str, Set[Atom]] = defaultdict(set)
        self.pos_index: Dict[Tuple[str, int, Term], Set[Atom]] = defaultdict(set)
        self.null_index: Dict[Term, Set[Atom]] = defaultdict(set)
        self.arities: Dict[str, int] = dict(arities or {})
        self.stats: Counter = stats if stats is not None else Counter()
        for a in facts:
            self.add_fact(a)

    def __len__(self) -> int:
        return len(self.facts)

    def __contains__(self, a: Atom) -> bool:
        return a in self.facts

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.facts)

    def __repr__(self) -> str:
        return f"Instance({len(self.facts)} facts, {len(self.degree)} nulls)"

    def sorted_facts(self) -> List[Atom]:
        return sorted(self.facts, key=atom_key)

    def nulls(self) -> Set[Term]:
        return set(self.null_index)

    def check_arity(self, a: Atom) -> None:
        known = self.arities.setdefault(a.pred, len(a.terms))
        if known != len(a.terms):
            raise ArityError(f"{a.pred} used with arity {len(a.terms)}, expected {known}")

    def add_fact(self, a: Atom, degree: int = 0) -> bool:
        """Insert a fact; new nulls get ``degree``.  Returns False if present."""
        if a in self.facts:
            return False
        for t in a.terms:
            if t.kind == VAR:
                raise ValueError(f"not a fact: {a}")
        self.check_arity(a)
        self.facts.add(a)
        self.pred_index[a.pred].add(a)
        for i, t in enumerate(a.terms):
            self.pos_index[(a.pred, i, t)].add(a)
            if t.kind == NULL:
                if t not in self.null_index:
                    self.degree[t] = degree
                self.null_index[t].add(a)
        return True

    def remove_fact(self, a: Atom) -> bool:
        """Remove a fact if present; nulls left without atoms lose their degree."""
        if a not in self.facts:
            return False
        self.facts.discard(a)
        _discard(self.pred_index, a.pred, a)
        for i, t in enumerate(a.terms):
            _discard(self.pos_index, (a.pred, i, t), a)
            if t.kind == NULL:
                if _discard(self.null_index, t, a):
                    self.degree.pop(t, None)
        return True

    def copy(self) -> "Instance":
        new = Instance.__new__(Instance)
        new.facts = set(self.facts)
        new.degree = dict(self.degree)
        new.pred_index = defaultdict(set, {k: set(v) for k, v in self.pred_index.items()})
        new.pos_index = defaultdict(set, {k: set(v) for k, v in self.pos_index.items()})
        new.null_index = defaultdict(set, {k: set(v) for k, v in self.null_index.items()})
        new.arities = dict(self.arities)
        new.stats = self.stats
        return new

    def rebuilt(self) -> "Instance":
        """Fresh instance indexed from scratch; used to audit index consistency."""
        new = Instance(arities=self.arities, stats=Counter())
        for a in self.facts:
            new.add_fact(a)
        new.degree = {n: self.degree.get(n, 0) for n in new.degree}
        return new

    def index_snapshot(self) -> tuple:
        def norm(index):
            return {k: frozenset(v) for k, v in index.items() if v}

        return (norm(self.pred_index), norm(self.pos_index), norm(self.null_index),
                frozenset(self.degree))

    def same_facts(self, other: "Instance") -> bool:
        return self.facts == other.facts and self.degree == other.degree


def _discard(index: dict, key, a: Atom) -> bool:
    """Remove ``a`` from ``index[key]``; True if the bucket became empty."""
    bucket = index.get(key)
    if bucket is None:
        return False
    bucket.discard(a)
    if not bucket:
        del index[key]
        return True
    return False


@dataclass
class Pattern:
    """Conjunctive pattern with an optional negated head.

    Variables of ``negated_head`` that do not occur in ``atoms`` are free: an
    answer survives only if no fact instantiates the head at all.
    """

    atoms: Sequence[Atom]
    negated_head: Optional[Atom] = None

    @property
    def variables(self) -> Set[Term]:
        out: Set[Term] = set()
        for a in self.atoms:
            out |= a.variables()
        return out

    @property
    def seeds(self) -> Set[Term]:
        return {t for a in self.atoms for t in a.terms if t.kind != VAR}


class SearchBudgetExceeded(Exception):
    pass


def _candidates(inst: Instance, a: Atom, binding: Substitution) -> Optional[Set[Atom]]:
    best = None
    for i, t in enumerate(a.terms):
        if t.kind == VAR:
            t = binding.get(t)
            if t is None:
                continue
        got = inst.pos_index.get((a.pred, i, t))
        if got is None:
            return None
        if best is None or len(got) < len(best):
            best = got
    if best is None:
        best = inst.pred_index.get(a.pred)
    return best


def _unify(pattern: Atom, fact: Atom, binding: Substitution) -> Optional[Substitution]:
    new = None
    for p, f in zip(pattern.terms, fact.terms):
        if p.kind == VAR:
            cur = binding.get(p) if new is None else new.get(p)
            if cur is None:
                if new is None:
                    new = dict(binding)
                new[p] = f
            elif cur != f:
                return None
        elif p != f:
            return None
    return binding if new is None else new


def _plan(atoms: Sequence[Atom], bound: Set[Term]) -> List[Atom]:
    """Join order: repeatedly take the atom with the most bound terms,
    ties broken by textual order.  Which variables are bound at a given
    depth does not depend on the values found, so the order is fixed up
    front."""
    bound = set(bound)
    rest = list(atoms)
    order = []
    while rest:
        idx = max(range(len(rest)),
                  key=lambda i: (sum(1 for t in rest[i].terms if t.kind != VAR or t in bound), -i))
        a = rest.pop(idx)
        order.append(a)
        bound |= a.variables()
    return order


def _cands(inst: Instance, a: Atom, binding: Substitution, ordered: bool):
    cands = _candidates(inst, a, binding) or ()
    return iter(sorted(cands, key=atom_key) if ordered else tuple(cands))


def _solve(inst: Instance, atoms: List[Atom], binding: Substitution, budget: list,
           ordered: bool) -> Iterator[Substitution]:
    """Depth-first join with an explicit stack, so block queries with
    thousands of atoms do not hit the recursion limit."""
    if not atoms:
        yield binding
        return
    order = _plan(atoms, set(binding))
    last = len(order) - 1
    stack = [(0, _cands(inst, order[0], binding, ordered), binding)]
    while stack:
        depth, it, b0 = stack[-1]
        fact = next(it, None)
        if fact is None:
            stack.pop()
            continue
        if budget[0] is not None:
            budget[0] -= 1
            if budget[0] < 0:
                raise SearchBudgetExceeded
        b = _unify(order[depth], fact, b0)
        if b is None:
            continue
        if depth == last:
            yield b
        else:
            stack.append((depth + 1, _cands(inst, order[depth + 1], b, ordered), b))


def answer_key(h: Substitution) -> tuple:
    return tuple(term_key(h[v]) for v in sorted(h, key=term_key))


def head_exists(inst: Instance, head: Atom, binding: Substitution) -> bool:
    """Is there a fact matching ``head`` under ``binding``, remaining
    variables free?"""
    for _ in _solve(inst, [head], binding, [None], False):
        return True
    return False


def iter_matches(inst: Instance, atoms: Sequence[Atom], binding: Optional[Substitution] = None,
                 *, max_steps: Optional[int] = None, ordered: bool = False) -> Iterator[Substitution]:
    """Raw, unordered stream of homomorphisms from ``atoms`` into ``inst``."""
    return _solve(inst, list(atoms), dict(binding or {}), [max_steps], ordered)


def match_pattern(inst: Instance, pattern: Pattern, binding: Optional[Substitution] = None,
                  *, limit: Optional[int] = None, max_steps: Optional[int] = None) -> List[Substitution]:
    """All substitutions over the pattern variables mapping ``pattern.atoms``
    into the instance and satisfying the negated head, sorted by
    (variable, term) so results are reproducible.

    ``limit`` and ``max_steps`` cap the search; when either is given the
    candidate facts are visited in sorted order so a capped answer set is
    still deterministic.  Hitting ``max_steps`` returns what was found.
    """
    inst.stats["queries"] += 1
    inst.stats["patterns"] += 1
    ordered = limit is not None or max_steps is not None
    out = []
    seen = set()
    it = iter_matches(inst, pattern.atoms, binding, max_steps=max_steps, ordered=ordered)
    try:
        for h in it:
            if pattern.negated_head is not None and head_exists(inst, pattern.negated_head, h):
                continue
            k = answer_key(h)
            if k in seen:
                continue
            seen.add(k)
            out.append(h)
            if limit is not None and len(out) >= limit:
                break
    except SearchBudgetExceeded:
        inst.stats["budget_exhausted"] += 1
    out.sort(key=answer_key)
    return out


def q_bucket(inst: Instance, atoms: Iterable[Atom]) -> Set[Term]:
    """Nulls of ``inst`` occurring in facts whose predicate is used by ``atoms``."""
    inst.stats["queries"] += 1
    inst.stats["bucket_queries"] += 1
    out: Set[Term] = set()
    for pred in {a.pred for a in atoms}:
        for f in inst.pred_index.get(pred, ()):
            for t in f.terms:
                if t.kind == NULL:
                    out.add(t)
    return out


def q_degree_ok(inst: Instance, nulls: Iterable[Term], dmax: int) -> bool:
    inst.stats["queries"] += 1
    inst.stats["degree_queries"] += 1
    return all(inst.degree[n] < dmax for n in nulls if n in inst.degree)


def q_set_degrees(inst: Instance, nulls: Iterable[Term], d: int) -> None:
    if d < 0:
        raise ValueError("degree must be non-negative")
    inst.stats["queries"] += 1
    inst.stats["degree_queries"] += 1
    for n in nulls:
        if n in inst.degree:
            inst.degree[n] = d


def q_iso(inst: Instance, atoms: Iterable[Atom]) -> Set[Atom]:
    """Facts of ``inst`` isomorphic to some atom in ``atoms``."""
    inst.stats["queries"] += 1
    inst.stats["iso_queries"] += 1
    out: Set[Atom] = set()
    for s in atoms:
        sig = iso_signature(s)
        probe = Atom(s.pred, tuple(t if t.kind == CONST else Term(VAR, f"v{i}")
                                   for i, t in enumerate(s.terms)))
        cands = _candidates(inst, probe, {})
        for f in cands or ():
            if iso_signature(f) == sig:
                out.add(f)
    return out


def linked_null(inst: Instance, n: Term) -> Tuple[Set[Atom], Set[Term]]:
    """Atoms reachable from null ``n`` through shared nulls, and their nulls.

    Breadth-first over the null index; each null lookup counts as one query.
    Unknown nulls yield empty sets.
    """
    if n not in inst.null_index:
        return set(), set()
    inst.stats["linked_null_traversals"] += 1
    atoms: Set[Atom] = set()
    nulls = {n}
    frontier = deque([n])
    while frontier:
        cur = frontier.popleft()
        inst.stats["queries"] += 1
        inst.stats["linked_null_lookups"] += 1
        for a in inst.null_index.get(cur, ()):
            if a in atoms:
                continue
            atoms.add(a)
            for t in a.terms:
                if t.kind == NULL and t not in nulls:
                    nulls.add(t)
                    frontier.append(t)
    return atoms, nulls
