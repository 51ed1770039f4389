"""Print scaling tables: corner drive thresholds and corner potentials, with fitted exponents.

    python scripts/scaling_tables.py              # acceptance grids
    python scripts/scaling_tables.py --extended   # adds larger d=3 grids and local slopes
"""
import argparse
import math

from sandpile_lab import electro, harness
from sandpile_lab.grid import GridShape


def table(title, result):
    print(f"\n{title}")
    print(f"{'n':>5} {'value':>16}")
    for n, v in result.points:
        print(f"{n:>5} {float(v):>16.6g}")
    verdict = "PASS" if result.passed else "FAIL"
    print(f"slope {result.slope:.4f}  r2 {result.r2:.5f}  expected {result.expected} +- {result.tolerance}  {verdict}")


def local_slopes(ns, d):
    vals = [float(electro.corner_field(GridShape(n, d))[(1,) * d]) for n in ns]
    print(f"\nlocal exponents of the corner potential, d={d}")
    print(f"{'n':>5} {'value':>14} {'slope to next':>14}")
    for k, (n, v) in enumerate(zip(ns, vals)):
        nxt = ""
        if k + 1 < len(ns):
            nxt = f"{math.log(vals[k + 1] / v) / math.log(ns[k + 1] / n):.3f}"
        print(f"{n:>5} {v:>14.6g} {nxt:>14}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--extended", action="store_true")
    args = ap.parse_args()

    table("corner drive threshold, d=2", harness.fit_quantity("tcl", [8, 12, 16, 24, 32, 48], 2))
    table("corner potential, d=2", harness.fit_quantity("corner-potential", [8, 16, 32, 64, 128], 2))
    table("corner drive threshold, d=3", harness.fit_quantity("tcl", [4, 6, 8], 3))
    table("corner potential, d=3", harness.fit_quantity("corner-potential", [6, 8, 12, 16], 3))
    if args.extended:
        table("corner potential, d=3, larger grid", harness.fit_quantity("corner-potential", [16, 24, 32, 48], 3))
        local_slopes([4, 6, 8, 12, 16, 24, 32, 48], 3)


if __name__ == "__main__":
    main()
