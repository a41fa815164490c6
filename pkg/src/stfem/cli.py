"""Command-line driver: mesh generation, single runs, convergence studies, validation."""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, fem, mesh as meshmod, problems
from .mesh import MeshError
from .quadrature import quadrature
from .solver import SolverError, solve

RUNNABLE = ("example1", "example2", "smooth3d")
EXAMPLES = RUNNABLE + ("example3",)


@dataclass
class RunConfig:
    subcommand: str
    example: str
    N: int | None = None
    levels: list[int] | None = None
    out: str | None = None
    svg: str | None = None
    solver: str = "lu"
    seed: int = 0
    mesh: str | None = None
    quad_error: int | None = None
    zero_source: bool = False

    @staticmethod
    def min_level(example: str) -> int:
        return 2 if example == "smooth3d" else 5

    def check(self, parser):
        lo = self.min_level(self.example)
        if self.N is not None and self.N < lo:
            parser.error(f"--N must be >= {lo} for {self.example}")
        if self.levels is not None:
            if any(n < lo for n in self.levels):
                parser.error(f"--levels must all be >= {lo} for {self.example}")
            if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
                parser.error(f"--levels must be strictly increasing, got {self.levels}")
        if self.quad_error is not None:
            d = problems.get_problem(self.example).d
            try:
                quadrature(d, self.quad_error)
            except ValueError as err:
                parser.error(str(err))


def _levels(text: str) -> list[int]:
    try:
        out = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("no levels given")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stfem", description=__doc__)
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, examples, solver=True):
        sp.add_argument("--example", required=True, choices=examples)
        sp.add_argument("--seed", type=int, default=0)
        if solver:
            sp.add_argument("--solver", choices=("lu", "krylov"), default="lu")
            sp.add_argument("--quad-error", type=int, default=None,
                            help="quadrature degree of the error norm")

    m = sub.add_parser("mesh", help="generate and export a mesh")
    common(m, RUNNABLE, solver=False)
    m.add_argument("--N", type=int, required=True)
    m.add_argument("--out", required=True)

    r = sub.add_parser("run", help="solve one level and report its error")
    common(r, EXAMPLES)
    r.add_argument("--N", type=int)
    r.add_argument("--mesh", help="import this mesh instead of generating one")
    r.add_argument("--out", help="solution file (mesh with appended nodal values)")
    r.add_argument("--zero-source", action="store_true",
                   help="replace the source term by zero (u_h = 0)")

    c = sub.add_parser("convergence", help="run a refinement study and write CSV")
    common(c, RUNNABLE)
    c.add_argument("--levels", type=_levels, required=True)
    c.add_argument("--out", help="CSV path (stdout when omitted)")
    c.add_argument("--svg", help="log-log plot of error versus h")

    v = sub.add_parser("validate", help="run self-checks and print PASS/FAIL")
    common(v, RUNNABLE, solver=False)
    v.add_argument("--N", type=int, default=20)
    return p


def _config(args) -> RunConfig:
    return RunConfig(
        subcommand=args.subcommand, example=args.example,
        N=getattr(args, "N", None), levels=getattr(args, "levels", None),
        out=getattr(args, "out", None), svg=getattr(args, "svg", None),
        solver=getattr(args, "solver", "lu"), seed=args.seed,
        mesh=getattr(args, "mesh", None), quad_error=getattr(args, "quad_error", None),
        zero_source=getattr(args, "zero_source", False),
    )


# ------------------------------------------------------------- commands

def cmd_mesh(cfg: RunConfig) -> int:
    prob = problems.get_problem(cfg.example)
    m = analysis.build_mesh(prob, cfg.N)
    meshmod.export_mesh(m, cfg.out)
    rep = meshmod.validate(m, prob.curves)
    print(f"{m.n_vertices} vertices, {m.n_elements} elements, h = {meshmod.mesh_size(m):.6e}, "
          f"{'valid' if rep.ok else 'INVALID'}")
    return 0 if rep.ok else 1


def cmd_run(cfg: RunConfig) -> int:
    prob = problems.get_problem(cfg.example)
    if cfg.zero_source:
        prob = prob.with_source(lambda x, t, region: np.zeros(len(t)))
    if cfg.mesh:
        m = meshmod.import_mesh(cfg.mesh)
    else:
        m = analysis.build_mesh(prob, cfg.N)
    lvl = analysis.solve_level(prob, cfg.N, mesh=m, method=cfg.solver,
                               error_degree=cfg.quad_error)
    out = cfg.out or f"{cfg.example}_N{cfg.N if cfg.N is not None else 'mesh'}.stsol"
    meshmod.export_mesh(m, out, solution=lvl.uh)
    n = cfg.N if cfg.N is not None else "-"
    err = "nan" if lvl.error is None else f"{lvl.error:.10e}"
    print(f"{n} {lvl.system.dof} {lvl.h:.10e} {err}")
    return 0


def cmd_convergence(cfg: RunConfig) -> int:
    prob = problems.get_problem(cfg.example)
    rep = analysis.convergence_study(prob, cfg.levels, method=cfg.solver,
                                     error_degree=cfg.quad_error)
    text = rep.to_csv()
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg.svg:
        Path(cfg.svg).write_text(rep.to_svg())
    return 0


def validation_checks(example: str, N: int, seed: int = 0):
    """Yield (name, passed, detail) for the self-check suite."""
    prob = problems.get_problem(example)
    m = analysis.build_mesh(prob, N)
    rep = meshmod.validate(m, prob.curves)
    yield "mesh conformity", rep.conforming, ""
    yield "mesh orientation", rep.oriented, f"min measure {rep.min_measure:.3e}"
    yield ("mesh covers domain", abs(rep.total_measure - rep.expected_measure) <= 1e-10,
           f"{rep.total_measure:.15g}")
    yield "mesh labeled", rep.labeled, ""
    if rep.interface_exactness is not None:
        yield ("interface vertices exact", rep.interface_exactness <= 1e-12,
               f"{rep.interface_exactness:.3e}")
        yield "interface-fitted scenarios", bool(rep.scenarios_ok), ""

    err = problems.source_oracle_error(prob, seed=seed)
    yield "source term vs finite differences", err <= 1e-6, f"{err:.3e}"
    x, t = problems.interior_points(prob, seed=seed)
    div = float(np.max(np.abs(problems.fd_divergence(prob, x, t))))
    yield "velocity divergence-free", div <= 1e-10, f"{div:.3e}"
    if prob.curves is not None:
        ju, jf = problems.interface_jumps(prob, seed=seed)
        yield "solution jump", ju <= 1e-10, f"{ju:.3e}"
        yield "flux jump", jf <= 1e-8, f"{jf:.3e}"

    system = fem.assemble(m, prob)
    probe = analysis.coercivity_probe(m, prob, trials=20, seed=seed, system=system)
    if example == "example1":
        yield "coercivity identity", probe.max_violation <= 1e-10, f"{probe.max_violation:.3e}"
    else:
        yield "coercivity inequality", probe.min_margin >= -1e-3, f"{probe.min_margin:.3e}"
    try:
        res = solve(system).relative_residual
        yield "Galerkin residual", res <= 1e-10, f"{res:.3e}"
    except SolverError as e:
        yield "Galerkin residual", False, str(e)


def cmd_validate(cfg: RunConfig) -> int:
    ok = True
    for name, passed, detail in validation_checks(cfg.example, cfg.N, cfg.seed):
        ok &= bool(passed)
        print(f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
    return 0 if ok else 1


COMMANDS = {"mesh": cmd_mesh, "run": cmd_run, "convergence": cmd_convergence,
            "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _config(args)
    cfg.check(parser)
    if cfg.subcommand == "run":
        if cfg.example == "example3":
            parser.error("example3 needs a user-supplied source term and fitted mesh; "
                         "use the Python API (problems.example3_coefficients(source=...))")
        if cfg.N is None and cfg.mesh is None:
            parser.error("run needs --N or --mesh")
    try:
        return COMMANDS[cfg.subcommand](cfg)
    except (MeshError, SolverError, ValueError, OSError) as err:
        print(f"stfem {cfg.subcommand}: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
