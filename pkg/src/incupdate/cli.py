"""Command-line front end.

Exit codes: 0 success (Accepted/Applied), 1 usage or input error,
2 rejected insertion, 3 violations found by ``check``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from collections import Counter
from pathlib import Path
from typing import List, Optional, Sequence

from .bench import BenchConfig, bench
from .chase import Status, UpdateEngine
from .oracle import OracleLimitError, full_core, is_consistent
from .simplify import simplify_instance
from .store import ArityError, Instance
from .terms import Atom
from .textio import (
    ParseError,
    SnapshotError,
    format_atom,
    format_facts,
    parse_atoms,
    parse_constraints,
    parse_facts,
    parse_snapshot,
    serialize_snapshot,
)

EXIT_OK, EXIT_USAGE, EXIT_REJECTED, EXIT_INCONSISTENT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="incupdate", description="Consistent updates over databases with marked nulls.")
    p.add_argument("--db", help="JSON snapshot of the instance")
    p.add_argument("--rules", help="constraint file (one tgd per line)")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--seed", type=int, default=0, help="seed for generated data (default 0)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("load", help="validate a fact file and write it as the --db snapshot")
    s.add_argument("facts", help="fact file")

    sub.add_parser("check", help="list constraint violations (exit 3 if any)")

    for name, helptext in (("insert", "insert atoms with side effects"),
                           ("delete", "delete atoms with side effects")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--atoms", required=True, help="fact file, or atoms given inline")
        s.add_argument("--delta-max", type=int, required=(name == "insert"), default=3,
                       dest="delta_max", help="maximal null degree")

    s = sub.add_parser("core", help="remove redundant atoms and rewrite the snapshot")
    s.add_argument("--full", action="store_true", help="use the exhaustive core search (small instances)")

    sub.add_parser("stats", help="summary of the snapshot")

    s = sub.add_parser("bench", help="run the scaling experiment")
    s.add_argument("--facts", type=int, default=BenchConfig.facts)
    s.add_argument("--nulls", type=_int_list, default=list(BenchConfig.null_counts))
    s.add_argument("--sizes", type=_int_list, default=list(BenchConfig.update_sizes))
    s.add_argument("--updates", type=int, default=BenchConfig.updates_per_size,
                   help="updates per size")
    s.add_argument("--delta-max", type=int, default=BenchConfig.dmax, dest="delta_max")
    s.add_argument("--csv", help="also write the CSV report to this file")
    return p


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read()


def _need(args, attr: str) -> str:
    val = getattr(args, attr)
    if not val:
        raise UsageError(f"--{attr} is required for '{args.command}'")
    return val


def _load_db(args) -> Instance:
    return parse_snapshot(_read(_need(args, "db")))


def _load_rules(args):
    return parse_constraints(_read(_need(args, "rules")))


def _write_db(path: str, inst: Instance) -> None:
    # write-then-rename so a failed run never leaves a truncated snapshot
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".snapshot-")
    with os.fdopen(fd, "w", encoding="utf-8") as f:
        f.write(serialize_snapshot(inst))
    os.replace(tmp, path)


def _atoms_arg(value: str) -> List[Atom]:
    if os.path.isfile(value):
        return parse_facts(_read(value))
    return parse_atoms(value)


def _emit(args, doc, lines: Sequence[str]) -> None:
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        for line in lines:
            print(line)


def cmd_load(args) -> int:
    db = _need(args, "db")
    arities = {}
    if args.rules:
        for c in _load_rules(args):
            for a in (*c.body, c.head):
                arities.setdefault(a.pred, a.arity)
    inst = Instance(parse_facts(_read(args.facts), dict(arities)), arities=arities)
    _write_db(db, inst)
    _emit(args, {"facts": len(inst), "nulls": len(inst.degree), "db": db},
          [f"loaded {len(inst)} facts ({len(inst.degree)} nulls) into {db}"])
    return EXIT_OK


def cmd_check(args) -> int:
    inst, rules = _load_db(args), _load_rules(args)
    found = is_consistent(inst, rules)
    _emit(args, {"consistent": not found, "violations": [str(v) for v in found]},
          [str(v) for v in found] or ["consistent"])
    return EXIT_INCONSISTENT if found else EXIT_OK


def cmd_update(args) -> int:
    inst, rules = _load_db(args), _load_rules(args)
    request = _atoms_arg(args.atoms)
    engine = UpdateEngine(rules, args.delta_max)
    out = engine.insert(inst, request) if args.command == "insert" else engine.delete(inst, request)
    if out.status is not Status.REJECTED:
        _write_db(args.db, out.instance)
    doc = out.to_json()
    lines = [out.status.value]
    lines += ["+ " + format_atom(a) for a in sorted(out.to_ins, key=lambda a: format_atom(a))]
    lines += ["- " + format_atom(a) for a in sorted(out.to_del, key=lambda a: format_atom(a))]
    _emit(args, doc, lines)
    return EXIT_REJECTED if out.status is Status.REJECTED else EXIT_OK


def cmd_core(args) -> int:
    inst = _load_db(args)
    before = len(inst)
    if args.full:
        result = full_core(inst)
        for n in result.degree:
            result.degree[n] = inst.degree.get(n, 0)
    else:
        result = simplify_instance(inst.copy(), inst.nulls())
    _write_db(args.db, result)
    _emit(args, {"before": before, "after": len(result)},
          [f"{before} -> {len(result)} facts"] + format_facts(result.facts).splitlines())
    return EXIT_OK


def cmd_stats(args) -> int:
    inst = _load_db(args)
    preds = Counter(a.pred for a in inst.facts)
    degrees = Counter(inst.degree.values())
    doc = {"facts": len(inst), "nulls": len(inst.degree),
           "predicates": dict(sorted(preds.items())),
           "degrees": {str(k): v for k, v in sorted(degrees.items())}}
    lines = [f"facts: {len(inst)}", f"nulls: {len(inst.degree)}"]
    lines += [f"  {p}: {n}" for p, n in sorted(preds.items())]
    _emit(args, doc, lines)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = BenchConfig(facts=args.facts, null_counts=tuple(args.nulls), update_sizes=tuple(args.sizes),
                      updates_per_size=args.updates, seed=args.seed, dmax=args.delta_max)
    rules = _load_rules(args) if args.rules else None
    report = bench(cfg, rules=rules)
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
    print(report.to_json() if args.json else report.to_csv(), end="" if not args.json else "\n")
    return EXIT_OK


COMMANDS = {"load": cmd_load, "check": cmd_check, "insert": cmd_update, "delete": cmd_update,
            "core": cmd_core, "stats": cmd_stats, "bench": cmd_bench}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, SnapshotError, ArityError, OracleLimitError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
