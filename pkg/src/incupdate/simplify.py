"""Incremental core maintenance over LinkedNull blocks.

For each block ``P`` touched by a null bucket, the block is turned into a
conjunctive query whose variables stand for ``null(P)``; its answers over
the instance are the P-homomorphisms.  The answers are laid out as a table
(one column per null, identity first) and a most specific idempotent row is
picked without further data access.  The block is then rewritten through
that row.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .store import Instance, Pattern, linked_null, match_pattern
from .terms import NULL, VAR, Atom, Substitution, Term, apply, term_key

log = logging.getLogger(__name__)

ANSWER_CAP = 10_000
LARGE_BLOCK_NULLS = 12
# node budget for the q_core search on large blocks
LARGE_BLOCK_STEPS = 2_000_000


@dataclass
class HPTable:
    """Answer table of a block query: ``rows[i][j]`` is the image of
    ``null_order[j]`` under the i-th homomorphism; row 0 is the identity."""

    null_order: List[Term]
    rows: List[Tuple[Term, ...]]
    cons_null: Optional[Set[Term]] = None

    def __post_init__(self):
        if not self.rows or tuple(self.rows[0]) != tuple(self.null_order):
            raise ValueError("first row of an HP table must be the identity")
        self._block = frozenset(self.null_order)

    def is_rigid(self, t: Term) -> bool:
        """Constants and nulls outside the block are fixed by every P-homomorphism."""
        if self.cons_null is not None and t in self.cons_null:
            return True
        return t not in self._block

    def substitution(self, i: int) -> Substitution:
        return dict(zip(self.null_order, self.rows[i]))

    def __len__(self) -> int:
        return len(self.rows)


def build_qcore(block: Iterable[Atom]) -> Tuple[Pattern, List[Term]]:
    """Query whose variables ``x1..xp`` replace the block's nulls.

    Nulls are numbered in term order; constants (and anything not a null of
    the block) stay literal.
    """
    block = list(block)
    if not block:
        raise ValueError("cannot build a block query from an empty block")
    order = sorted({t for a in block for t in a.terms if t.kind == NULL}, key=term_key)
    to_var = {n: Term(VAR, f"x{i + 1}") for i, n in enumerate(order)}
    atoms = sorted((apply(to_var, a) for a in block),
                   key=lambda a: (a.pred, tuple(term_key(t) for t in a.terms)))
    return Pattern(atoms), order


def _var_for(i: int) -> Term:
    return Term(VAR, f"x{i + 1}")


def build_hp_table(answers: Sequence[Substitution], null_order: Sequence[Term],
                   cons_null: Optional[Set[Term]] = None) -> HPTable:
    """Lay answers out as rows, identity first.

    Rows are ordered column by column, a cell equal to the column's own
    null coming before any other value (then term order).  The order only
    matters for tie-breaking in the row selection; this one makes it
    reproducible.
    """
    cols = [_var_for(i) for i in range(len(null_order))]
    ident = tuple(null_order)
    rows = list(dict.fromkeys(tuple(h[c] for c in cols) for h in answers))
    if ident not in rows:
        raise RuntimeError("identity answer missing from block query; index corrupted?")

    def key(row):
        return tuple((0,) if v == n else (1, term_key(v)) for v, n in zip(row, null_order))

    rows.sort(key=key)
    return HPTable(list(null_order), rows, cons_null)


def choose_most_specific_row(t: HPTable) -> int:
    """Index of a most specific idempotent row.

    First pass: discard non-idempotent rows and keep the first row with the
    most rigid cells.  Second pass: among rows agreeing with it on those
    rigid cells, keep the first with the fewest distinct block nulls.
    """
    p = len(t.null_order)
    col_of = {n: j for j, n in enumerate(t.null_order)}
    marked = set()
    row_max, count_max = 0, 0
    for i in range(1, len(t.rows)):
        row = t.rows[i]
        count = 0
        idem = True
        for j in range(p):
            cell = row[j]
            if t.is_rigid(cell):
                count += 1
            elif row[col_of[cell]] != cell:
                idem = False
                marked.add(i)
                break
        if idem and count > count_max:
            row_max, count_max = i, count

    best = t.rows[row_max]
    rigid_cols = [j for j in range(p) if t.is_rigid(best[j])]

    def distinct_nulls(row) -> int:
        return len({c for c in row if not t.is_rigid(c)})

    row_spec, count_min = row_max, distinct_nulls(best)
    for i in range(1, len(t.rows)):
        if i in marked or i == row_max:
            continue
        row = t.rows[i]
        if all(row[j] == best[j] for j in rigid_cols):
            n = distinct_nulls(row)
            if n < count_min:
                row_spec, count_min = i, n
    return row_spec


def choose_most_specific(t: HPTable) -> Substitution:
    return t.substitution(choose_most_specific_row(t))


def less_specific(t: HPTable, i: int, k: int) -> bool:
    """Whether row ``i`` is less specific than row ``k``, decided from the
    table alone: rigid cells of ``i`` must be copied by ``k``, and columns
    that ``i`` sends to the same block null must be merged by ``k`` too."""
    ri, rk = t.rows[i], t.rows[k]
    p = len(ri)
    for j in range(p):
        if t.is_rigid(ri[j]):
            if ri[j] != rk[j]:
                return False
        else:
            for j2 in range(p):
                if j2 != j and ri[j2] == ri[j] and rk[j] != rk[j2]:
                    return False
    return True


def is_row_idempotent(t: HPTable, i: int) -> bool:
    col_of = {n: j for j, n in enumerate(t.null_order)}
    row = t.rows[i]
    return all(t.is_rigid(c) or row[col_of[c]] == c for c in row)


def simplify_block(inst: Instance, block: Set[Atom], block_nulls: Set[Term]) -> bool:
    """Rewrite ``block`` through its most specific P-homomorphism.

    Returns True when atoms were removed.
    """
    pattern, order = build_qcore(block)
    inst.stats["qcore_evals"] += 1
    max_steps = LARGE_BLOCK_STEPS if len(order) > LARGE_BLOCK_NULLS else None
    if max_steps is not None:
        log.info("block with %d nulls: q_core evaluated under a search budget", len(order))
    answers = match_pattern(inst, pattern, limit=ANSWER_CAP, max_steps=max_steps)
    ident = {_var_for(i): n for i, n in enumerate(order)}
    if len(answers) >= ANSWER_CAP:
        log.warning("q_core answer cap (%d) hit on a block with %d nulls", ANSWER_CAP, len(order))
    if ident not in answers:
        # only possible when a cap cut the search short
        answers = [ident] + answers
    if len(answers) <= 1:
        return False
    table = build_hp_table(answers, order)
    h = choose_most_specific(table)
    if all(h[n] == n for n in order):
        return False
    removed = False
    for a in block:
        b = apply(h, a)
        if b != a:
            inst.remove_fact(a)
            removed = True
            # b is already in the instance: h maps the block into it
    if removed:
        inst.stats["rewrites"] += 1
    return removed


def simplify_instance(inst: Instance, bucket: Iterable[Term]) -> Instance:
    """Remove redundancy from every LinkedNull block reached from ``bucket``.

    Works in place and returns ``inst``.  Blocks are derived against the
    current instance when reached, and every block is processed once even
    if several bucket nulls lead to it.
    """
    seen: Set[Term] = set()
    for n in sorted(bucket, key=term_key):
        if n in seen or n not in inst.null_index:
            continue
        atoms, nulls = linked_null(inst, n)
        seen |= nulls
        inst.stats["blocks_simplified"] += 1
        simplify_block(inst, atoms, nulls)
    return inst
