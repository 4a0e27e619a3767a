"""Scaling trend: query patterns per update against the number of nulls.

Run:  python3 demos/scaling.py [--small]
"""
import sys

from incupdate.bench import BenchConfig, bench, linear_fit_ratio


def main(argv):
    cfg = BenchConfig()
    if "--small" in argv:
        cfg = BenchConfig(facts=400, null_counts=(0, 20, 40, 100, 200), update_sizes=(1, 5))
    report = bench(cfg)
    pts = report.per_family("patternsEvaluated")
    coef, ratios = linear_fit_ratio(pts)
    print(f"{'nulls':>6} {'patterns/update':>16} {'vs fit':>7}")
    for (n, y), r in zip(pts, ratios):
        print(f"{n:>6} {y:>16.1f} {r:>7.2f}")
    print(f"slope {coef[0]:.3f} patterns per null, intercept {coef[1]:.1f}")


if __name__ == "__main__":
    main(sys.argv[1:])
