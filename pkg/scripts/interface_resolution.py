"""Midpoint deviation of interface edges from the exact curves under refinement."""
import argparse

import numpy as np

from stfem import problems
from stfem.mesh import generate_fitted_mesh_1d, interface_edge_deviation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--example", default="example2", choices=("example1", "example2"))
    ap.add_argument("--levels", default="10,20,40,80,160,320")
    args = ap.parse_args()
    curves = problems.get_problem(args.example).curves
    levels = [int(s) for s in args.levels.split(",")]

    D = [interface_edge_deviation(generate_fitted_mesh_1d(N, curves), curves) for N in levels]
    print(f"{'N':>5} {'D(N)':>12} {'ratio':>7} {'rate':>6}")
    for k, (N, d) in enumerate(zip(levels, D)):
        if k == 0 or max(d, D[k - 1]) <= 1e-13:
            # straight interfaces are resolved up to roundoff
            print(f"{N:>5} {d:>12.4e}")
            continue
        ratio = D[k - 1] / d
        rate = np.log(ratio) / np.log(N / levels[k - 1])
        print(f"{N:>5} {d:>12.4e} {ratio:>7.3f} {rate:>6.3f}")


if __name__ == "__main__":
    main()
