"""Error norms, convergence orders and the coercivity probe."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import fem
from .mesh import SpaceTimeMesh, generate_fitted_mesh_1d, kuhn_cube_mesh, mesh_size
from .quadrature import quadrature
from .solver import SolveReport, solve


def _p1_gradients(mesh: SpaceTimeMesh, values):
    """Constant spatial gradient of the P1 interpolant per element, (ne, d)."""
    meas, grads = fem.geometry(mesh.coords())
    gx = grads[..., :mesh.dim]
    return meas, np.einsum("ek,ekd->ed", np.asarray(values)[mesh.elements], gx)


def y_norm_error(mesh: SpaceTimeMesh, uh, problem, quad=None) -> float:
    """Space-time L2 norm of grad_x(u - u_h).

    The exact gradient branch at each quadrature point follows the analytic
    region, not the element label.
    """
    if problem.exact_grad is None:
        raise ValueError(f"{problem.name} has no exact gradient")
    d = mesh.dim
    quad = quad or quadrature(d, fem.LOAD_DEGREE[d])
    meas, guh = _p1_gradients(mesh, uh)
    pts = fem.quadrature_points(mesh.coords(), quad)
    ne, nq = pts.shape[:2]
    flat = pts.reshape(-1, d + 1)
    x, t = flat[:, :d], flat[:, d]
    region = problem.region(x, t)
    if region is None:
        region = np.repeat(mesh.regions, nq)
    g = np.asarray(problem.exact_grad(x, t, region), dtype=float).reshape(ne, nq, d)
    err2 = np.sum((g - guh[:, None, :]) ** 2, axis=2)
    return float(np.sqrt(np.sum(meas * (err2 @ quad.weights))))


def energy_seminorm(mesh: SpaceTimeMesh, values, kappa=(1.0, 1.0)) -> float:
    """kappa_h-weighted spatial-gradient seminorm of a P1 nodal vector."""
    meas, g = _p1_gradients(mesh, values)
    k = np.where(mesh.regions == 1, kappa[0], kappa[1])
    return float(np.sqrt(np.sum(k * meas * np.sum(g * g, axis=1))))


def final_time_l2_squared(mesh: SpaceTimeMesh, values) -> float:
    """||v(., T)||^2 over Omega, exact for P1 on the t = T boundary facets."""
    d = mesh.dim
    values = np.asarray(values)
    T = mesh.vertices[:, d].max()
    at_T = np.abs(mesh.vertices[:, d] - T) <= 1e-12
    total = 0.0
    for k in range(d + 2):
        facets = np.delete(mesh.elements, k, axis=1)
        facets = facets[at_T[facets].all(axis=1)]
        if not len(facets):
            continue
        x = mesh.vertices[facets][..., :d]
        e = x[:, 1:, :] - x[:, :1, :]
        size = np.abs(np.linalg.det(e)) / math.factorial(d)
        y = values[facets]
        total += np.sum(size * (np.sum(y * y, axis=1) + y.sum(axis=1) ** 2)) / ((d + 1) * (d + 2))
    return float(total)


def eoc(errors, hs) -> list[float]:
    """Experimental orders log(e_{k-1}/e_k) / log(h_{k-1}/h_k)."""
    errors = np.asarray(errors, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if errors.shape != hs.shape or errors.ndim != 1 or len(errors) < 2:
        raise ValueError("need two equal-length sequences with at least two entries")
    if np.any(errors <= 0) or np.any(hs <= 0):
        raise ValueError("errors and mesh sizes must be positive")
    if np.any(np.diff(hs) >= 0):
        raise ValueError("mesh sizes must be strictly decreasing")
    return list(np.log(errors[:-1] / errors[1:]) / np.log(hs[:-1] / hs[1:]))


@dataclass(frozen=True)
class CoercivityResult:
    max_violation: float
    min_margin: float
    trials: int


def coercivity_probe(mesh: SpaceTimeMesh, problem, trials: int = 20, seed: int = 0,
                     system=None) -> CoercivityResult:
    """Compare y^T A y with |||y|||^2 + ||y(., T)||^2 / 2 for random y.

    ``max_violation`` is the largest relative defect of that identity;
    ``min_margin`` the smallest (y^T A y - |||y|||^2) / y^T A y.
    """
    system = system or fem.assemble(mesh, problem)
    rng = np.random.default_rng(seed)
    worst, margin = 0.0, math.inf
    for _ in range(trials):
        y = rng.uniform(-1.0, 1.0, system.dof)
        full = system.expand(y)
        yAy = float(y @ (system.matrix @ y))
        energy = energy_seminorm(mesh, full, problem.kappa) ** 2
        trace = final_time_l2_squared(mesh, full)
        if yAy == 0.0:
            continue
        worst = max(worst, abs(yAy - energy - 0.5 * trace) / abs(yAy))
        margin = min(margin, (yAy - energy) / yAy)
    return CoercivityResult(worst, margin if trials else 0.0, trials)


# ------------------------------------------------------------ studies

def build_mesh(problem, N: int) -> SpaceTimeMesh:
    if problem.d == 1:
        return generate_fitted_mesh_1d(N, problem.curves, problem.T)
    return kuhn_cube_mesh(N)


@dataclass
class LevelResult:
    N: int
    mesh: SpaceTimeMesh
    system: fem.SparseSystem
    report: SolveReport
    uh: np.ndarray
    h: float
    error: float
    interp_error: float | None


def solve_level(problem, N=None, mesh=None, method="lu", error_degree=None) -> LevelResult:
    mesh = mesh if mesh is not None else build_mesh(problem, N)
    system = fem.assemble(mesh, problem)
    report = solve(system, method=method)
    uh = system.expand(report.solution)
    err = ierr = None
    if problem.exact_grad is not None:
        eq = quadrature(mesh.dim, error_degree) if error_degree else None
        err = y_norm_error(mesh, uh, problem, eq)
        ierr = y_norm_error(mesh, fem.interpolate_exact(mesh, problem), problem, eq)
    return LevelResult(N, mesh, system, report, uh, mesh_size(mesh), err, ierr)


@dataclass
class ConvergenceRow:
    N: int
    dof: int
    h: float
    error: float
    order: float | None = None
    interp_error: float | None = None
    residual: float | None = None


@dataclass
class ConvergenceReport:
    problem: str
    rows: list[ConvergenceRow]
    assembly_degree: int = fem.ASSEMBLY_DEGREE
    error_degree: int | None = None
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    @property
    def orders(self) -> list[float]:
        return [r.order for r in self.rows[1:]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("N,dof,h,error,order\n")
        for r in self.rows:
            order = "" if r.order is None else f"{r.order:.6f}"
            buf.write(f"{r.N},{r.dof},{r.h:.10e},{r.error:.10e},{order}\n")
        return buf.getvalue()

    def to_svg(self, width=480, height=360) -> str:
        return loglog_svg([r.h for r in self.rows], [r.error for r in self.rows],
                          title=f"{self.problem}: Y-norm error", width=width, height=height)


def convergence_study(problem, levels, method="lu", error_degree=None) -> ConvergenceReport:
    levels = list(levels)
    if len(levels) < 1 or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError(f"levels must be strictly increasing, got {levels}")
    if problem.exact_grad is None:
        raise ValueError(f"{problem.name} has no exact solution to measure errors against")
    rows = []
    for N in levels:
        lvl = solve_level(problem, N, method=method, error_degree=error_degree)
        rows.append(ConvergenceRow(N, lvl.system.dof, lvl.h, lvl.error,
                                   interp_error=lvl.interp_error,
                                   residual=lvl.report.relative_residual))
    if len(rows) > 1:
        for r, o in zip(rows[1:], eoc([r.error for r in rows], [r.h for r in rows])):
            r.order = float(o)
    return ConvergenceReport(problem.name, rows, error_degree=error_degree
                             or fem.LOAD_DEGREE[problem.d])


# --------------------------------------------------------------- plotting

def loglog_svg(hs, errors, title="", width=480, height=360) -> str:
    """Log-log error plot with a slope-one reference line, as plain SVG."""
    hs, errors = np.asarray(hs, float), np.asarray(errors, float)
    lx, ly = np.log10(hs), np.log10(errors)
    ref = ly[0] + (lx - lx[0])
    ylo, yhi = min(ly.min(), ref.min()), max(ly.max(), ref.max())
    xlo, xhi = lx.min(), lx.max()
    pad = 0.1
    xlo, xhi = xlo - pad * (xhi - xlo or 1), xhi + pad * (xhi - xlo or 1)
    ylo, yhi = ylo - pad * (yhi - ylo or 1), yhi + pad * (yhi - ylo or 1)
    ml, mr, mt, mb = 60, 20, 30, 45

    def px(v):
        return ml + (v - xlo) / (xhi - xlo) * (width - ml - mr)

    def py(v):
        return height - mb - (v - ylo) / (yhi - ylo) * (height - mt - mb)

    def path(xs, ys):
        return " ".join(f"{'M' if i == 0 else 'L'}{px(a):.2f},{py(b):.2f}"
                        for i, (a, b) in enumerate(zip(xs, ys)))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{width - ml - mr}" height="{height - mt - mb}" '
        'fill="none" stroke="black"/>',
        f'<path d="{path(lx, ref)}" fill="none" stroke="gray" stroke-dasharray="6,4"/>',
        f'<path d="{path(lx, ly)}" fill="none" stroke="black" stroke-width="1.5"/>',
    ]
    for a, b in zip(lx, ly):
        out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3.5" fill="black"/>')
    for a in lx:
        out.append(f'<text x="{px(a):.2f}" y="{height - mb + 16}" font-size="10" '
                   f'text-anchor="middle">{10 ** a:.3g}</text>')
    for b in ly:
        out.append(f'<text x="{ml - 6}" y="{py(b) + 3:.2f}" font-size="10" '
                   f'text-anchor="end">{10 ** b:.3g}</text>')
    out += [
        f'<text x="{width / 2:.1f}" y="{height - 8}" font-size="12" text-anchor="middle">h</text>',
        f'<text x="{width / 2:.1f}" y="18" font-size="13" text-anchor="middle">{title}</text>',
        f'<text x="{width - mr - 4}" y="{mt + 14}" font-size="10" text-anchor="end" '
        'fill="gray">slope 1</text>',
        "</svg>",
    ]
    return "\n".join(out) + "\n"
