"""An insertion whose side effects would never stop is rejected once a
generated null reaches the degree bound.

Run:  python3 demos/divergence.py
"""
from incupdate import UpdateEngine, parse_atoms, parse_constraints
from incupdate.store import Instance

RULES = parse_constraints("""\
Cites(?X,?Y) -> Publication(?X).
Cites(?X,?Y) -> Publication(?Y).
Publication(?X) -> Cites(?X,?Y).
""")


def main():
    for dmax in (1, 2, 3):
        out = UpdateEngine(RULES, dmax).insert(Instance(), parse_atoms("Publication(P235)"))
        print(f"dmax={dmax}: {out.status.value}, {len(out.to_ins)} atoms generated, "
              f"{out.stats.get('degree_cut', 0)} firing(s) cut")


if __name__ == "__main__":
    main()
