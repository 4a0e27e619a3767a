"""Text formats: fact files, rule files and JSON snapshots.

Lexical rules shared by every format:

* ``_name`` is a marked null;
* ``?name`` is a variable (rule files only);
* any other identifier, or a single-quoted string, is a constant.

Fact files hold one ``Pred(t1, ..., tn).`` per line; rule files hold one
``B1, ..., Bm -> H.`` per line, where at most one body atom may carry a
leading ``-`` to mark it for backward deletion (default: the leftmost).
``%`` starts a comment.
"""
from __future__ import annotations

import json
import re
from typing import Dict, List, Optional, Tuple

from .store import ArityError, Instance
from .terms import CONST, NULL, VAR, Atom, Constraint, Term, atom_key

_IDENT = re.compile(r"[A-Za-z0-9][A-Za-z0-9_.\-]*")
_BARE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_]*$")
_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>%[^\n]*)
  | (?P<arrow>->)
  | (?P<str>'(?:[^'\\]|\\.)*')
  | (?P<null>_[A-Za-z0-9_]+)
  | (?P<var>\?[A-Za-z0-9_]+)
  | (?P<ident>[A-Za-z0-9][A-Za-z0-9_.\-]*)
  | (?P<punct>[(),.;\-])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.msg, self.line, self.col = msg, line, col
        super().__init__(f"{line}:{col}: {msg}" if line else msg)


class SnapshotError(ValueError):
    pass


def _tokens(line: str, lineno: int) -> List[Tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None:
            raise ParseError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            out.append((kind, m.group(), pos + 1))
        pos = m.end()
    return out


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


class _Cursor:
    def __init__(self, toks, lineno: int, text: str):
        self.toks, self.i, self.lineno, self.text = toks, 0, lineno, text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("eol", "", len(self.text) + 1)

    def take(self, kind: str, value: Optional[str] = None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = repr(value) if value else kind
            got = repr(tok[1]) if tok[1] else "end of line"
            raise ParseError(f"expected {want}, got {got}", self.lineno, tok[2])
        self.i += 1
        return tok

    def error(self, msg: str):
        raise ParseError(msg, self.lineno, self.peek()[2])


def _term(cur: _Cursor, allow_vars: bool, allow_nulls: bool) -> Term:
    kind, text, col = cur.peek()
    if kind == "str":
        cur.i += 1
        return Term(CONST, _unquote(text))
    if kind == "ident":
        cur.i += 1
        return Term(CONST, text)
    if kind == "null":
        if not allow_nulls:
            raise ParseError(f"nulls are not allowed here: {text}", cur.lineno, col)
        cur.i += 1
        return Term(NULL, text)
    if kind == "var":
        if not allow_vars:
            raise ParseError(f"variables are not allowed in facts: {text}", cur.lineno, col)
        cur.i += 1
        return Term(VAR, text[1:])
    cur.error("expected a term")


def _atom(cur: _Cursor, allow_vars: bool, allow_nulls: bool) -> Atom:
    _, pred, _ = cur.take("ident")
    cur.take("punct", "(")
    terms = []
    if cur.peek()[1] != ")":
        terms.append(_term(cur, allow_vars, allow_nulls))
        while cur.peek()[1] == ",":
            cur.i += 1
            terms.append(_term(cur, allow_vars, allow_nulls))
    cur.take("punct", ")")
    return Atom(pred, tuple(terms))


def _lines(text: str):
    for n, line in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        toks = _tokens(line, n)
        if toks:
            yield n, line, toks


def _check_arity(arities: Dict[str, int], a: Atom, lineno: int) -> None:
    if arities.setdefault(a.pred, a.arity) != a.arity:
        raise ParseError(f"{a.pred} has arity {arities[a.pred]} elsewhere, got {a.arity}", lineno, 1)


def parse_facts(text: str, arities: Optional[Dict[str, int]] = None) -> List[Atom]:
    arities = {} if arities is None else arities
    out = []
    for n, line, toks in _lines(text):
        cur = _Cursor(toks, n, line)
        a = _atom(cur, allow_vars=False, allow_nulls=True)
        cur.take("punct", ".")
        if cur.peek()[0] != "eol":
            cur.error("trailing input after fact")
        _check_arity(arities, a, n)
        out.append(a)
    return out


def parse_atom(text: str, allow_vars: bool = False) -> Atom:
    """Single atom, with or without a final ``.``."""
    toks = _tokens(text.strip(), 1)
    cur = _Cursor(toks, 1, text)
    a = _atom(cur, allow_vars=allow_vars, allow_nulls=True)
    if cur.peek()[1] == ".":
        cur.i += 1
    if cur.peek()[0] != "eol":
        cur.error("trailing input after atom")
    return a


def parse_atoms(text: str, arities: Optional[Dict[str, int]] = None) -> List[Atom]:
    """Facts given inline: any number per line, separated by ``.``, ``,``
    or ``;`` (the final separator is optional)."""
    arities = {} if arities is None else arities
    out = []
    for n, line, toks in _lines(text):
        cur = _Cursor(toks, n, line)
        while cur.peek()[0] != "eol":
            a = _atom(cur, allow_vars=False, allow_nulls=True)
            _check_arity(arities, a, n)
            out.append(a)
            if cur.peek()[1] in (".", ",", ";"):
                cur.i += 1
            elif cur.peek()[0] != "eol":
                cur.error("expected a separator between atoms")
    return out


def parse_constraints(text: str, arities: Optional[Dict[str, int]] = None) -> List[Constraint]:
    arities = {} if arities is None else arities
    out = []
    for n, line, toks in _lines(text):
        cur = _Cursor(toks, n, line)
        body = []
        marked = None
        while True:
            if cur.peek()[1] == "-" and cur.peek()[0] == "punct":
                if marked is not None:
                    cur.error("more than one body atom is marked")
                cur.i += 1
                marked = len(body)
            body.append(_atom(cur, allow_vars=True, allow_nulls=False))
            if cur.peek()[1] == ",":
                cur.i += 1
                continue
            break
        cur.take("arrow")
        head = _atom(cur, allow_vars=True, allow_nulls=False)
        if cur.peek()[1] == ",":
            cur.error("rule heads must be a single atom")
        cur.take("punct", ".")
        if cur.peek()[0] != "eol":
            cur.error("trailing input after rule")
        for a in (*body, head):
            _check_arity(arities, a, n)
        out.append(Constraint(tuple(body), head, marked or 0, label=f"c{len(out) + 1}"))
    return out


def format_term(t: Term) -> str:
    if t.kind == NULL:
        return t.name
    if t.kind == VAR:
        return "?" + t.name
    if _BARE.match(t.name):
        return t.name
    return "'" + t.name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_atom(a: Atom) -> str:
    return f"{a.pred}({', '.join(format_term(t) for t in a.terms)})"


def format_facts(atoms) -> str:
    return "".join(format_atom(a) + ".\n" for a in sorted(atoms, key=atom_key))


def format_constraint(c: Constraint) -> str:
    body = ", ".join(("-" if i == c.marked and c.marked != 0 else "") + format_atom(a)
                     for i, a in enumerate(c.body))
    return f"{body} -> {format_atom(c.head)}."


def _parse_term_token(s: str) -> Term:
    toks = _tokens(s, 1)
    if len(toks) != 1 or toks[0][0] not in ("ident", "str", "null"):
        raise SnapshotError(f"bad term encoding: {s!r}")
    kind, text, _ = toks[0]
    if kind == "null":
        return Term(NULL, text)
    if kind == "str":
        return Term(CONST, _unquote(text))
    return Term(CONST, text)


def serialize_snapshot(inst: Instance) -> str:
    facts = [{"pred": a.pred, "terms": [format_term(t) for t in a.terms]}
             for a in inst.sorted_facts()]
    degrees = {n.name: inst.degree[n] for n in sorted(inst.degree, key=lambda t: t.name)}
    return json.dumps({"facts": facts, "degrees": degrees}, separators=(",", ":"),
                      ensure_ascii=False)


def parse_snapshot(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SnapshotError(f"malformed snapshot JSON: {e}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("facts"), list) \
            or not isinstance(doc.get("degrees", {}), dict):
        raise SnapshotError("snapshot must be an object with 'facts' and 'degrees'")
    inst = Instance()
    for i, f in enumerate(doc["facts"]):
        try:
            pred, terms = f["pred"], f["terms"]
        except (TypeError, KeyError):
            raise SnapshotError(f"fact #{i} needs 'pred' and 'terms'") from None
        if not isinstance(pred, str) or not _IDENT.fullmatch(pred) or not isinstance(terms, list):
            raise SnapshotError(f"fact #{i} is malformed")
        a = Atom(pred, tuple(_parse_term_token(t) for t in terms))
        try:
            inst.add_fact(a)
        except ArityError as e:
            raise SnapshotError(str(e)) from None
    for name, d in doc.get("degrees", {}).items():
        n = Term(NULL, name)
        if n not in inst.degree:
            raise SnapshotError(f"degree given for unknown null {name}")
        if not isinstance(d, int) or isinstance(d, bool) or d < 0:
            raise SnapshotError(f"degree of {name} must be a non-negative integer")
        inst.degree[n] = d
    return inst
