"""Terms, atoms, constraints and the substitution algebra.

Terms come in three disjoint kinds: constants, marked nulls and variables.
Facts are atoms without variables.  A substitution is a plain ``dict``
mapping nulls or variables to terms; anything outside its domain is left
alone, and constants are never rewritten.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, NamedTuple, Optional, Tuple

CONST = "const"
NULL = "null"
VAR = "var"

_KIND_RANK = {CONST: 0, NULL: 1, VAR: 2}


class Term(NamedTuple):
    kind: str
    name: str

    @property
    def is_const(self) -> bool:
        return self.kind == CONST

    @property
    def is_null(self) -> bool:
        return self.kind == NULL

    @property
    def is_var(self) -> bool:
        return self.kind == VAR

    def __str__(self) -> str:
        if self.kind == VAR:
            return "?" + self.name
        return self.name

    def __repr__(self) -> str:
        return f"{self.kind[0].upper()}({self.name})"


def const(name: str) -> Term:
    return Term(CONST, name)


def null(name: str) -> Term:
    """Null named ``name``; the ``_`` sigil is added when missing."""
    if not name.startswith("_"):
        name = "_" + name
    return Term(NULL, name)


def var(name: str) -> Term:
    return Term(VAR, name.lstrip("?"))


_DIGITS = re.compile(r"([0-9]+)")


@lru_cache(maxsize=None)
def _natural(name: str) -> tuple:
    parts = _DIGITS.split(name)
    return tuple((1, int(p)) if _DIGITS.fullmatch(p) else (0, p) for p in parts if p)


def term_key(t: Term) -> tuple:
    """Total order on terms: constants, then nulls, then variables;
    names compared naturally so that ``_N2`` sorts before ``_N10``."""
    return (_KIND_RANK[t.kind], _natural(t.name))


class Atom(NamedTuple):
    pred: str
    terms: Tuple[Term, ...]

    @property
    def arity(self) -> int:
        return len(self.terms)

    def is_fact(self) -> bool:
        return all(t.kind != VAR for t in self.terms)

    def nulls(self) -> FrozenSet[Term]:
        return frozenset(t for t in self.terms if t.kind == NULL)

    def variables(self) -> FrozenSet[Term]:
        return frozenset(t for t in self.terms if t.kind == VAR)

    def __str__(self) -> str:
        return f"{self.pred}({', '.join(map(str, self.terms))})"

    def __repr__(self) -> str:
        return str(self)


def atom(pred: str, *terms: Term) -> Atom:
    return Atom(pred, tuple(terms))


def atom_key(a: Atom) -> tuple:
    return (a.pred, tuple(term_key(t) for t in a.terms))


def nulls_of(a: Atom) -> FrozenSet[Term]:
    return a.nulls()


def nulls_in(atoms: Iterable[Atom]) -> set:
    out = set()
    for a in atoms:
        for t in a.terms:
            if t.kind == NULL:
                out.add(t)
    return out


@dataclass(frozen=True)
class Constraint:
    """A tgd ``body -> head``; ``marked`` indexes the body atom removed by
    backward chasing."""

    body: Tuple[Atom, ...]
    head: Atom
    marked: int = 0
    label: Optional[str] = None

    def __post_init__(self):
        if not self.body:
            raise ValueError("constraint body must not be empty")
        if not 0 <= self.marked < len(self.body):
            raise ValueError(f"marked index {self.marked} out of range")
        for a in (*self.body, self.head):
            if a.nulls():
                raise ValueError(f"nulls are not allowed in constraints: {a}")

    @property
    def universal(self) -> FrozenSet[Term]:
        out = set()
        for a in self.body:
            out |= a.variables()
        return frozenset(out)

    @property
    def existential(self) -> FrozenSet[Term]:
        return self.head.variables() - self.universal

    @property
    def marked_atom(self) -> Atom:
        return self.body[self.marked]

    def __str__(self) -> str:
        body = ", ".join(
            ("-" if i == self.marked else "") + str(a) for i, a in enumerate(self.body)
        )
        return f"{body} -> {self.head}."


Substitution = Dict[Term, Term]


def apply(h: Substitution, a: Atom) -> Atom:
    if not h:
        return a
    return Atom(a.pred, tuple(h.get(t, t) if t.kind != CONST else t for t in a.terms))


def apply_term(h: Substitution, t: Term) -> Term:
    if t.kind == CONST:
        return t
    return h.get(t, t)


def normalize(h: Substitution) -> Substitution:
    """Drop identity entries and anything mapping a constant."""
    return {k: v for k, v in h.items() if k != v and k.kind != CONST}


def compose(h1: Substitution, h2: Substitution) -> Substitution:
    """Substitution equivalent to applying ``h1`` first, then ``h2``."""
    out = {}
    for k in set(h1) | set(h2):
        if k.kind == CONST:
            continue
        v = apply_term(h2, apply_term(h1, k))
        if v != k:
            out[k] = v
    return out


def is_idempotent(h: Substitution) -> bool:
    return compose(h, h) == normalize(h)


def atoms_isomorphic(a: Atom, b: Atom) -> bool:
    """True when a null bijection (constants fixed) maps ``a`` onto ``b``."""
    if a.pred != b.pred or len(a.terms) != len(b.terms):
        return False
    fwd: Dict[Term, Term] = {}
    bwd: Dict[Term, Term] = {}
    for s, t in zip(a.terms, b.terms):
        if s.kind != t.kind:
            return False
        if s.kind != NULL:
            if s != t:
                return False
            continue
        if fwd.setdefault(s, t) != t or bwd.setdefault(t, s) != s:
            return False
    return True


def iso_signature(a: Atom) -> tuple:
    """Hashable shape shared by exactly the atoms isomorphic to ``a``."""
    seen: Dict[Term, int] = {}
    shape = []
    for t in a.terms:
        if t.kind == NULL:
            shape.append(("n", seen.setdefault(t, len(seen))))
        else:
            shape.append(t)
    return (a.pred, tuple(shape))
