"""Consistent insertion and deletion under tgds.

Both pipelines compute side effects incrementally (only constraints whose
body touches the update fire), then simplify the instance with respect to
the nulls the update touched.  Insertions are rejected when a null reaching
the maximal degree survives simplification; deletions always go through.
"""
from __future__ import annotations

import enum
import re
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .simplify import simplify_instance
from .store import (
    ArityError,
    Instance,
    Pattern,
    head_exists,
    iter_matches,
    match_pattern,
    q_bucket,
    q_degree_ok,
    q_iso,
    q_set_degrees,
)
from .terms import (
    NULL,
    VAR,
    Atom,
    Constraint,
    Substitution,
    Term,
    apply,
    atom_key,
    atoms_isomorphic,
    iso_signature,
)


class Status(str, enum.Enum):
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"
    APPLIED = "Applied"


@dataclass
class UpdateOutcome:
    status: Status
    instance: Instance
    to_ins: List[Atom] = field(default_factory=list)
    to_del: List[Atom] = field(default_factory=list)
    stats: Dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status is not Status.REJECTED

    def to_json(self) -> dict:
        from .textio import format_atom

        return {
            "status": self.status.value,
            "toIns": [format_atom(a) for a in sorted(self.to_ins, key=atom_key)],
            "toDel": [format_atom(a) for a in sorted(self.to_del, key=atom_key)],
            "stats": dict(sorted(self.stats.items())),
        }


_FRESH = re.compile(r"^_N([0-9]+)$")


def _unify_fact(pattern: Atom, fact: Atom) -> Optional[Substitution]:
    if pattern.pred != fact.pred or len(pattern.terms) != len(fact.terms):
        return None
    h: Substitution = {}
    for p, f in zip(pattern.terms, fact.terms):
        if p.kind == VAR:
            if h.setdefault(p, f) != f:
                return None
        elif p != f:
            return None
    return h


class UpdateEngine:
    """Applies updates to instances under a fixed constraint set.

    The engine owns the fresh-null counter: fresh nulls are named ``_N<k>``
    with ``k`` strictly above every ``_N<k>`` seen so far, so names are
    never reused within a session.
    """

    def __init__(self, constraints: Sequence[Constraint], dmax: int):
        self.constraints = list(constraints)
        self.dmax = dmax
        self._next_null = 1
        self.arities: Dict[str, int] = {}
        for c in self.constraints:
            for a in (*c.body, c.head):
                if self.arities.setdefault(a.pred, a.arity) != a.arity:
                    raise ArityError(f"{a.pred} used with two arities in constraints")

    # -- bookkeeping ------------------------------------------------------

    def observe(self, atoms: Iterable[Atom]) -> None:
        """Move the fresh-null counter above any ``_N<k>`` in ``atoms``."""
        for a in atoms:
            for t in a.terms:
                if t.kind == NULL:
                    m = _FRESH.match(t.name)
                    if m:
                        self._next_null = max(self._next_null, int(m.group(1)) + 1)

    def fresh_null(self) -> Term:
        n = Term(NULL, f"_N{self._next_null}")
        self._next_null += 1
        return n

    def _validate(self, inst: Instance, atoms: Iterable[Atom]) -> None:
        for a in atoms:
            if not a.is_fact():
                raise ValueError(f"update atoms must be facts: {a}")
            want = self.arities.get(a.pred, inst.arities.get(a.pred))
            if want is not None and want != a.arity:
                raise ArityError(f"{a.pred} used with arity {a.arity}, expected {want}")

    # -- forward chase ----------------------------------------------------

    def _chase_into(self, work: Instance, to_ins: Dict[Atom, None], queue: deque) -> None:
        """Saturate ``work`` from the atoms in ``queue``; generated atoms are
        added to both ``work`` and ``to_ins``."""
        stats = work.stats
        while queue:
            a = queue.popleft()
            for c in self.constraints:
                for i, b in enumerate(c.body):
                    if b.pred != a.pred:
                        continue
                    seed = _unify_fact(b, a)
                    if seed is None:
                        continue
                    rest = c.body[:i] + c.body[i + 1:]
                    answers = match_pattern(work, Pattern(rest, c.head), seed)
                    stats["chase_patterns"] += 1
                    for h in answers:
                        self._fire(work, c, h, to_ins, queue)

    def _fire(self, work: Instance, c: Constraint, h: Substitution,
              to_ins: Dict[Atom, None], queue: deque) -> None:
        # an earlier firing in this round may already satisfy the head
        if head_exists(work, c.head, h):
            return
        body_deg = [work.degree[t] for b in c.body for t in apply(h, b).terms if t.kind == NULL]
        new_deg = max(body_deg) + 1 if body_deg else 0
        ext = c.existential
        head_deg = max(body_deg, default=0)
        if ext:
            head_deg = max(head_deg, new_deg)
        if head_deg > self.dmax:
            work.stats["degree_cut"] += 1
            return
        full = dict(h)
        for v in sorted(ext, key=lambda t: t.name):
            full[v] = self.fresh_null()
        head = apply(full, c.head)
        work.add_fact(head, degree=new_deg)
        work.stats["atoms_generated"] += 1
        to_ins[head] = None
        queue.append(head)

    def chase4insert(self, inst: Instance, request: Iterable[Atom]) -> Tuple[List[Atom], Instance]:
        """Side effects of inserting ``request``.

        Returns ``(to_ins, work)`` where ``to_ins`` lists the request followed
        by generated atoms and ``work`` is a copy of ``inst`` with them added
        (its degree map carries the degrees of new nulls).  ``inst`` is not
        modified.
        """
        request = list(dict.fromkeys(request))
        self._validate(inst, request)
        self.observe(inst.facts)
        self.observe(request)
        work = inst.copy()
        to_ins: Dict[Atom, None] = {}
        for a in request:
            work.add_fact(a, degree=0)
            to_ins[a] = None
        self._chase_into(work, to_ins, deque(request))
        return list(to_ins), work

    def insert(self, inst: Instance, request: Iterable[Atom]) -> UpdateOutcome:
        before = Counter(inst.stats)
        to_ins, work = self.chase4insert(inst, request)
        bucket = q_bucket(work, to_ins)
        simplify_instance(work, bucket)
        if q_degree_ok(work, bucket, self.dmax):
            q_set_degrees(work, bucket, 0)
            status, result = Status.ACCEPTED, work
        else:
            status, result = Status.REJECTED, inst
        return UpdateOutcome(status, result, to_ins, [], _delta(inst.stats, before))

    # -- deletion ---------------------------------------------------------

    def _probe(self, cur: Instance, to_ins: Iterable[Atom], head: Atom,
               head_deg: int) -> Tuple[List[Atom], Instance]:
        """Forward chase of a candidate head over ``cur``.

        ``cur`` already contains ``to_ins`` saturated, so only the head
        needs to seed the chase; the result still lists ``to_ins`` first.
        """
        work = cur.copy()
        new: Dict[Atom, None] = dict.fromkeys(to_ins)
        work.add_fact(head, degree=head_deg)
        new[head] = None
        self._chase_into(work, new, deque([head]))
        return list(new), work

    def chase4delete(self, inst: Instance, iso_del: Iterable[Atom]) -> Tuple[List[Atom], List[Atom], Dict[Term, int]]:
        """Backward/forward chase for a deletion.

        Returns ``(to_del, to_ins, degrees)``; ``degrees`` holds the degree of
        every null occurring in ``to_ins``.
        """
        self.observe(inst.facts)
        stats = inst.stats
        to_del: Dict[Atom, None] = {}
        del_sigs: Counter = Counter()
        to_ins: Dict[Atom, None] = {}
        cur = inst.copy()  # (D minus ToDel) plus ToIns
        pending: deque = deque()
        handled: Set[tuple] = set()

        def add_del(a: Atom) -> None:
            if a in to_del:
                return
            to_del[a] = None
            del_sigs[iso_signature(a)] += 1
            to_ins.pop(a, None)
            cur.remove_fact(a)
            pending.append(a)

        for a in sorted(iso_del, key=atom_key):
            add_del(a)

        while pending:
            target = pending.popleft()
            grew = False
            for ci, c in enumerate(self.constraints):
                seed = _unify_fact(c.head, target)
                if seed is None:
                    continue
                stats["chase_patterns"] += 1
                for h in match_pattern(cur, Pattern(c.body), seed):
                    key = (ci, tuple(sorted(h.items())))
                    if key in handled:
                        continue
                    body = [apply(h, b) for b in c.body]
                    # earlier iterations may have removed body atoms
                    if not all(b in cur for b in body):
                        continue
                    handled.add(key)
                    marked = apply(h, c.marked_atom)
                    full = dict(h)
                    for v in sorted(c.existential, key=lambda t: t.name):
                        full[v] = self.fresh_null()
                    new_head = apply(full, c.head)
                    if atoms_isomorphic(new_head, target):
                        add_del(marked)
                        continue
                    body_deg = [cur.degree[t] for b in body for t in b.terms if t.kind == NULL]
                    new_deg = max(body_deg) + 1 if body_deg else 0
                    new_ins, work = self._probe(cur, to_ins, new_head, new_deg)
                    clash = any(iso_signature(a) in del_sigs for a in new_ins)
                    too_deep = any(work.degree[t] >= self.dmax
                                   for a in new_ins for t in a.terms if t.kind == NULL)
                    if clash or too_deep:
                        stats["probe_rejected"] += 1
                        add_del(marked)
                        # the refused head joins ToDel so it is never proposed again
                        add_del(new_head)
                        continue
                    for a in new_ins:
                        if a not in to_ins:
                            to_ins[a] = None
                            cur.add_fact(a)
                            grew = True
                        for t in a.terms:
                            if t.kind == NULL:
                                cur.degree[t] = work.degree[t]
            if grew:
                # new ToIns atoms may complete bodies for earlier targets
                queued = set(pending)
                pending.extend(a for a in to_del if a not in queued)
        degrees = {t: cur.degree[t] for a in to_ins for t in a.terms
                   if t.kind == NULL and t in cur.degree}
        return list(to_del), list(to_ins), degrees

    def delete(self, inst: Instance, request: Iterable[Atom]) -> UpdateOutcome:
        before = Counter(inst.stats)
        request = list(request)
        self._validate(inst, request)
        iso_del = q_iso(inst, request)
        to_del, to_ins, degrees = self.chase4delete(inst, iso_del)
        work = inst.copy()
        for a in to_ins:
            work.add_fact(a)
        for a in to_del:
            work.remove_fact(a)
        for n, d in degrees.items():
            if n in work.degree:
                work.degree[n] = d
        bucket = q_bucket(work, to_ins + to_del)
        simplify_instance(work, bucket)
        q_set_degrees(work, bucket, 0)
        return UpdateOutcome(Status.APPLIED, work, to_ins, to_del, _delta(inst.stats, before))


def _delta(now: Counter, before: Counter) -> Dict[str, int]:
    return {k: v - before.get(k, 0) for k, v in now.items() if v != before.get(k, 0)}


def insert(inst: Instance, constraints: Sequence[Constraint], dmax: int,
           request: Iterable[Atom]) -> UpdateOutcome:
    return UpdateEngine(constraints, dmax).insert(inst, request)


def delete(inst: Instance, constraints: Sequence[Constraint], dmax: int,
           request: Iterable[Atom]) -> UpdateOutcome:
    return UpdateEngine(constraints, dmax).delete(inst, request)


def chase4insert(inst: Instance, constraints: Sequence[Constraint], dmax: int,
                 request: Iterable[Atom]) -> Tuple[List[Atom], Dict[Term, int]]:
    """Functional form: returns the ToIns list and the degrees of its nulls."""
    to_ins, work = UpdateEngine(constraints, dmax).chase4insert(inst, request)
    degrees = {t: work.degree[t] for a in to_ins for t in a.terms if t.kind == NULL}
    return to_ins, degrees


def chase4delete(inst: Instance, constraints: Sequence[Constraint], dmax: int,
                 iso_del: Iterable[Atom]) -> Tuple[List[Atom], List[Atom]]:
    to_del, to_ins, _ = UpdateEngine(constraints, dmax).chase4delete(inst, iso_del)
    return to_del, to_ins
