"""Energy identity defect for random constrained vectors on fitted meshes."""
import argparse

from stfem import analysis, problems


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", default="10,20,40,80")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    levels = [int(s) for s in args.levels.split(",")]
    for name in ("example1", "example2"):
        prob = problems.get_problem(name)
        for N in levels:
            res = analysis.coercivity_probe(analysis.build_mesh(prob, N), prob,
                                            trials=args.trials, seed=args.seed)
            print(f"{name} N={N:<4} identity defect {res.max_violation:.3e}  "
                  f"margin {res.min_margin:.3e}")


if __name__ == "__main__":
    main()
