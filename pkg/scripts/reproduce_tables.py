"""Refinement studies for the three manufactured problems.

Writes <name>.csv and <name>.svg into the output directory and prints the
error table with interpolation errors alongside.
"""
import argparse
from pathlib import Path

from stfem import analysis, problems

LEVELS = {
    "example1": [10, 20, 40, 80, 160],
    "example2": [10, 20, 40, 80, 160],
    "smooth3d": [4, 8, 16],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--solver", choices=("lu", "krylov"), default="lu")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for name, levels in LEVELS.items():
        rep = analysis.convergence_study(problems.get_problem(name), levels, method=args.solver)
        (out / f"{name}.csv").write_text(rep.to_csv())
        (out / f"{name}.svg").write_text(rep.to_svg())
        print(f"\n{name}")
        print(f"{'N':>5} {'dof':>8} {'h':>11} {'error':>11} {'order':>7} {'interp':>11}")
        for r in rep.rows:
            order = "" if r.order is None else f"{r.order:.3f}"
            print(f"{r.N:>5} {r.dof:>8} {r.h:>11.4e} {r.error:>11.4e} {order:>7} "
                  f"{r.interp_error:>11.4e}")


if __name__ == "__main__":
    main()
