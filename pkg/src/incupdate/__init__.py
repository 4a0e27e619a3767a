"""Consistent updates for databases with marked nulls under tgds."""
from .chase import Status, UpdateEngine, UpdateOutcome, chase4delete, chase4insert, delete, insert
from .oracle import full_chase, full_core, instances_isomorphic, is_consistent
from .simplify import HPTable, build_hp_table, build_qcore, choose_most_specific, simplify_instance
from .store import ArityError, Instance, Pattern, linked_null, match_pattern
from .terms import Atom, Constraint, Term, atom, const, null, var
from .textio import (
    ParseError,
    SnapshotError,
    format_atom,
    format_constraint,
    format_facts,
    parse_atom,
    parse_atoms,
    parse_constraints,
    parse_facts,
    parse_snapshot,
    serialize_snapshot,
)

__version__ = "0.1.0"
