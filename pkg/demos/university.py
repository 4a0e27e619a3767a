"""Walk through updates on a small university database.

Run:  python3 demos/university.py
"""
from incupdate import UpdateEngine, parse_atoms, parse_constraints
from incupdate.oracle import is_consistent
from incupdate.store import Instance
from incupdate.textio import format_facts

RULES = parse_constraints("""\
Supervises(?X,?Y) -> Researcher(?X).
Supervises(?X,?Y) -> Student(?Y).
Authors(?X,?Y) -> Researcher(?X).
Authors(?X,?Y) -> Publication(?Y).
Researcher(?X) -> Authors(?X,?Y).
-Authors(?X,?P), Authors(?Y,?P), Supervises(?X,?Y) -> PhDPaper(?Y,?P,?Z).
""")

START = parse_atoms("""\
Researcher(Elin). Authors(Elin, P269). Publication(P235). Authors(Sten, P269).
Publication(P269). Student(Sten). Supervises(Elin, Sten). Researcher(Nils).
PhDPaper(Sten, P269, 2022).
""")


def show(title, inst):
    print(f"== {title} ({len(inst)} facts)")
    print(format_facts(inst.facts), end="")
    print()


def main():
    engine = UpdateEngine(RULES, dmax=3)
    raw = Instance(START)
    print("violations before repair:", ", ".join(map(str, is_consistent(raw, RULES))))
    db = engine.insert(Instance(), START).instance
    show("after loading through the engine", db)

    out = engine.insert(db, parse_atoms("Authors(Nils, P235)"))
    print("insert Authors(Nils, P235):", out.status.value)
    show("the placeholder paper of Nils is gone", out.instance)

    out = engine.delete(db, parse_atoms("PhDPaper(Sten, P269, 2022)"))
    print("delete PhDPaper(Sten, P269, 2022):", out.status.value)
    show("the paper is regenerated with an unknown year", out.instance)

    phd = [f for f in out.instance.facts if f.pred == "PhDPaper"]
    again = engine.delete(out.instance, phd)
    print("delete it again:", again.status.value, "side deletions:",
          ", ".join(sorted(map(str, again.to_del))))
    show("Elin no longer authors P269", again.instance)


if __name__ == "__main__":
    main()
