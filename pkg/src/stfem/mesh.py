"""Simplicial space-time meshes fitted to moving interfaces.

Vertices live in R^{d+1}: the first ``d`` coordinates are space (domain
(0,1)^d), the last one is time in [0, T].  Elements are positively oriented
simplices with ``d + 2`` vertices and a region label in {1, 2} (0 while
unclassified).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

INTERIOR = "i"
LATERAL = "lb"
INITIAL = "t0"
FINAL = "tf"
INTERFACE = "if"
MARKERS = (INTERIOR, LATERAL, INITIAL, FINAL, INTERFACE)
CONSTRAINED = (LATERAL, INITIAL)

SNAP_TOL = 1e-12


class MeshError(ValueError):
    """Raised for invalid mesh input or violated generation bounds."""


@dataclass(frozen=True, eq=False)
class SpaceTimeMesh:
    dim: int
    vertices: np.ndarray
    elements: np.ndarray
    regions: np.ndarray
    markers: np.ndarray

    def __post_init__(self):
        for name in ("vertices", "elements", "regions", "markers"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def T(self) -> float:
        return float(self.vertices[:, -1].max())

    def __eq__(self, other):
        if not isinstance(other, SpaceTimeMesh):
            return NotImplemented
        return (self.dim == other.dim
                and np.array_equal(self.vertices, other.vertices)
                and np.array_equal(self.elements, other.elements)
                and np.array_equal(self.regions, other.regions)
                and np.array_equal(self.markers, other.markers))

    __hash__ = None

    def coords(self) -> np.ndarray:
        """Element vertex coordinates, shape (ne, d+2, d+1)."""
        return self.vertices[self.elements]

    @cached_property
    def interface_facets(self) -> list[tuple[int, int]]:
        """(element, local facet) pairs whose vertices all carry the interface
        marker.  The local facet index is the opposite vertex."""
        on = self.markers[self.elements] == INTERFACE
        out = []
        for k in range(self.dim + 2):
            mask = np.delete(on, k, axis=1).all(axis=1)
            out.extend((int(e), k) for e in np.flatnonzero(mask))
        return sorted(out)

    def with_regions(self, regions) -> "SpaceTimeMesh":
        return replace(self, regions=np.asarray(regions, dtype=np.int8))


# ------------------------------------------------------------------ geometry

def signed_measures(mesh: SpaceTimeMesh) -> np.ndarray:
    c = mesh.coords()
    J = c[:, 1:, :] - c[:, :1, :]
    return np.linalg.det(J) / math.factorial(mesh.dim + 1)


def element_diameters(mesh: SpaceTimeMesh) -> np.ndarray:
    c = mesh.coords()
    diam = np.zeros(mesh.n_elements)
    for i, j in itertools.combinations(range(mesh.dim + 2), 2):
        diam = np.maximum(diam, np.linalg.norm(c[:, i] - c[:, j], axis=1))
    return diam


def mesh_size(mesh: SpaceTimeMesh) -> float:
    """Largest element diameter."""
    if mesh.n_elements == 0:
        raise MeshError("mesh size of an empty mesh is undefined")
    return float(element_diameters(mesh).max())


def _orient(vertices, elements):
    """Swap the last two vertices of negatively oriented simplices."""
    c = vertices[elements]
    det = np.linalg.det(c[:, 1:, :] - c[:, :1, :])
    elements = elements.copy()
    neg = det < 0
    elements[neg, -2], elements[neg, -1] = elements[neg, -1], elements[neg, -2].copy()
    return elements


def _box_markers(vertices, T, interface=None):
    d = vertices.shape[1] - 1
    x, t = vertices[:, :d], vertices[:, d]
    markers = np.full(len(vertices), INTERIOR, dtype="<U2")
    markers[np.isclose(t, T, rtol=0, atol=SNAP_TOL)] = FINAL
    if interface is not None:
        markers[interface] = INTERFACE
    markers[np.isclose(t, 0.0, rtol=0, atol=SNAP_TOL)] = INITIAL
    lateral = np.any(np.isclose(x, 0.0, rtol=0, atol=SNAP_TOL)
                     | np.isclose(x, 1.0, rtol=0, atol=SNAP_TOL), axis=1)
    markers[lateral] = LATERAL
    return markers


# ------------------------------------------------------ structured meshes

def _grid_triangles(N, anti=None):
    """Two triangles per cell of an (N+1) x (N+1) grid, vertex id j*(N+1)+i."""
    j, i = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    a = j * (N + 1) + i
    b, c, dd = a + 1, a + N + 2, a + N + 1
    lower = np.stack([a, b, c], axis=-1)
    upper = np.stack([a, c, dd], axis=-1)
    if anti is not None:
        lower = np.where(anti[..., None], np.stack([a, b, dd], axis=-1), lower)
        upper = np.where(anti[..., None], np.stack([b, c, dd], axis=-1), upper)
    return np.stack([lower, upper], axis=2).reshape(-1, 3)


def tensor_mesh_1d(N: int, T: float = 1.0) -> SpaceTimeMesh:
    """Unfitted (N+1) x (N+1) grid of (0,1) x (0,T), all elements region 2."""
    if N < 1:
        raise MeshError(f"N must be positive, got {N}")
    x = np.linspace(0.0, 1.0, N + 1)
    t = np.linspace(0.0, T, N + 1)
    X, Tt = np.meshgrid(x, t)
    verts = np.column_stack([X.ravel(), Tt.ravel()])
    elems = _grid_triangles(N)
    return SpaceTimeMesh(1, verts, elems, np.full(len(elems), 2, dtype=np.int8),
                         _box_markers(verts, T))


def generate_fitted_mesh_1d(N: int, curves, T: float = 1.0) -> SpaceTimeMesh:
    """Interface-fitted triangulation of (0,1) x (0,T) for two moving points.

    Builds the uniform tensor grid, moves the nearest interior node of every
    time level onto each interface curve and picks the cell diagonal that
    follows the interface, so the discrete interface is a chain of edges.
    The returned mesh is classified.
    """
    if N < 5:
        raise MeshError(f"N must be >= 5, got {N}")
    levels = np.linspace(0.0, T, N + 1)
    fine = np.linspace(0.0, T, 50 * N + 1)
    L = [np.asarray(c(levels), dtype=float) for c in curves.curves()]

    step = max(float(np.max(np.abs(np.diff(Li)))) for Li in L)
    if step >= 1.0 / N:
        raise MeshError(
            f"interface moves {step:.4g} per time level, must be < 1/N = {1.0 / N:.4g}")
    gap = float(np.min(curves.L2(fine) - curves.L1(fine)))
    if gap * N < 2.0 - 1e-9:
        raise MeshError(f"min(L2 - L1) = {gap:.4g} must be at least 2/N = {2.0 / N:.4g}")

    X = np.tile(np.linspace(0.0, 1.0, N + 1), (N + 1, 1))
    claimed = np.full((N + 1, N + 1), -1)
    chains = []
    for ci, Li in enumerate(L):
        k = np.rint(Li * N).astype(int)
        if np.any((k < 1) | (k > N - 1)):
            raise MeshError(f"curve {ci + 1} leaves the interior of the domain")
        for j, kj in enumerate(k):
            if claimed[j, kj] >= 0:
                raise MeshError(
                    f"curves {claimed[j, kj] + 1} and {ci + 1} snap to the same node "
                    f"(time level {j}, column {kj})")
            claimed[j, kj] = ci
            X[j, kj] = Li[j]
        chains.append(k)
    if np.any(np.abs(chains[1] - chains[0]) < 2):
        raise MeshError("interface curves snap to adjacent grid columns")

    anti = np.zeros((N, N), dtype=bool)
    for k in chains:
        back = np.flatnonzero(k[1:] == k[:-1] - 1)
        anti[back, k[back + 1]] = True

    Tt = np.repeat(levels, N + 1).reshape(N + 1, N + 1)
    verts = np.column_stack([X.ravel(), Tt.ravel()])
    elems = _orient(verts, _grid_triangles(N, anti))
    interface = np.flatnonzero(claimed.ravel() >= 0)
    markers = _box_markers(verts, T, interface)
    mesh = SpaceTimeMesh(1, verts, elems, np.zeros(len(elems), dtype=np.int8), markers)
    return classify_elements(mesh, curves)


def kuhn_cube_mesh(N: int) -> SpaceTimeMesh:
    """Kuhn subdivision of (0,1)^3 into 6 N^3 congruent tetrahedra."""
    if N < 2:
        raise MeshError(f"N must be >= 2, got {N}")
    g = np.linspace(0.0, 1.0, N + 1)
    T, Y, X = np.meshgrid(g, g, g, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel(), T.ravel()])

    k, j, i = np.meshgrid(np.arange(N), np.arange(N), np.arange(N), indexing="ij")
    base = (i + (N + 1) * (j + (N + 1) * k)).ravel()
    offset = np.array([1, N + 1, (N + 1) ** 2])
    tets = []
    for perm in itertools.permutations(range(3)):
        v1 = offset[perm[0]]
        v2 = v1 + offset[perm[1]]
        v3 = offset.sum()
        tets.append(np.column_stack([base, base + v1, base + v2, base + v3]))
    elems = _orient(verts, np.concatenate(tets))
    return SpaceTimeMesh(2, verts, elems, np.full(len(elems), 2, dtype=np.int8),
                         _box_markers(verts, 1.0))


# ----------------------------------------------------------- classification

def interface_chains(mesh: SpaceTimeMesh, curves):
    """Discrete interface chains: per curve, the snapped x at every time level."""
    if mesh.dim != 1:
        raise MeshError("interface chains are defined for d = 1 only")
    x, t = mesh.vertices[:, 0], mesh.vertices[:, 1]
    levels = np.unique(t)
    chains = []
    for ci, L in enumerate(curves.curves()):
        on = np.abs(x - L(t)) <= SNAP_TOL
        tl, xl = t[on], x[on]
        if not np.array_equal(np.unique(tl), levels):
            raise MeshError(f"curve {ci + 1} is not resolved by a vertex at every time level")
        order = np.argsort(tl, kind="stable")
        chains.append(xl[order])
    return levels, chains


def _side(mesh, curves, x, t):
    """+1 inside strip, -1 outside, 0 on a discrete chain."""
    levels, (c1, c2) = interface_chains(mesh, curves)
    x1 = np.interp(t, levels, c1)
    x2 = np.interp(t, levels, c2)
    side = np.where((x > x1) & (x < x2), 1, -1)
    on = (np.abs(x - x1) <= SNAP_TOL) | (np.abs(x - x2) <= SNAP_TOL)
    return np.where(on, 0, side)


def classify_elements(mesh: SpaceTimeMesh, curves) -> SpaceTimeMesh:
    """Label elements 1 between the discrete interface chains, 2 outside."""
    centroid = mesh.coords().mean(axis=1)
    side = _side(mesh, curves, centroid[:, 0], centroid[:, 1])
    if np.any(side == 0):
        e = int(np.flatnonzero(side == 0)[0])
        raise MeshError(f"element {e} has its centroid on the discrete interface")
    return mesh.with_regions(np.where(side > 0, 1, 2))


def interface_edge_deviation(mesh: SpaceTimeMesh, curves) -> float:
    """Max |x_mid - L_i(t_mid)| over element edges joining two vertices of the
    same interface curve at different times."""
    x, t = mesh.vertices[:, 0], mesh.vertices[:, 1]
    edges = np.concatenate([mesh.elements[:, [i, j]]
                            for i, j in itertools.combinations(range(3), 2)])
    edges = np.unique(np.sort(edges, axis=1), axis=0)
    worst = 0.0
    for L in curves.curves():
        on = np.abs(x - L(t)) <= SNAP_TOL
        sel = on[edges[:, 0]] & on[edges[:, 1]] & (t[edges[:, 0]] != t[edges[:, 1]])
        a, b = edges[sel, 0], edges[sel, 1]
        xm, tm = 0.5 * (x[a] + x[b]), 0.5 * (t[a] + t[b])
        if len(xm):
            worst = max(worst, float(np.max(np.abs(xm - L(tm)))))
    return worst


# ---------------------------------------------------------------- validation

@dataclass
class ValidationReport:
    min_measure: float
    max_measure: float
    total_measure: float
    expected_measure: float
    conforming: bool
    oriented: bool
    quasi_uniformity: float
    interface_exactness: float | None = None
    scenarios_ok: bool | None = None
    labeled: bool = True
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


def _facet_counts(mesh):
    facets = np.concatenate([np.delete(mesh.elements, k, axis=1)
                             for k in range(mesh.dim + 2)])
    facets = np.sort(facets, axis=1)
    return np.unique(facets, axis=0, return_counts=True)


def _check_conformity(mesh) -> bool:
    facets, counts = _facet_counts(mesh)
    if np.any(counts > 2):
        return False
    bnd = facets[counts == 1]
    c = mesh.vertices[bnd]  # (nb, d+1, d+1)
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    on_face = np.zeros(len(bnd), dtype=bool)
    for axis in range(mesh.dim + 1):
        for val in (lo[axis], hi[axis]):
            on_face |= np.all(np.abs(c[:, :, axis] - val) <= SNAP_TOL, axis=1)
    return bool(on_face.all())


def validate(mesh: SpaceTimeMesh, curves=None) -> ValidationReport:
    """Geometric and topological health report; never raises on bad meshes."""
    problems = []
    if mesh.n_elements == 0:
        return ValidationReport(0.0, 0.0, 0.0, 0.0, False, False, math.inf,
                                problems=["empty mesh"])
    meas = signed_measures(mesh)
    diam = element_diameters(mesh)
    oriented = bool(np.all(meas > 0))
    if not oriented:
        problems.append(f"{int(np.sum(meas <= 0))} elements with non-positive measure")
    conforming = _check_conformity(mesh)
    if not conforming:
        problems.append("mesh is not conforming")
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    expected = float(np.prod(hi - lo))
    total = float(np.abs(meas).sum())
    if abs(total - expected) > 1e-10:
        problems.append(f"elements cover {total:.15g}, domain measure is {expected:.15g}")
    labeled = bool(np.all(np.isin(mesh.regions, (1, 2))))
    if not labeled:
        problems.append("unlabeled elements")
    quasi = float(diam.max() / diam.min()) if diam.min() > 0 else math.inf

    exact = scen = None
    if curves is not None and mesh.dim == 1:
        x, t = mesh.vertices[:, 0], mesh.vertices[:, 1]
        iv = mesh.markers == INTERFACE
        dev = np.min([np.abs(x - L(t)) for L in curves.curves()], axis=0)
        exact = float(dev[iv].max()) if iv.any() else 0.0
        if exact > SNAP_TOL:
            problems.append(f"interface vertices off the curves by {exact:.3g}")
        try:
            side = _side(mesh, curves, x, t)[mesh.elements]
            want = np.where(mesh.regions == 1, 1, -1)[:, None]
            scen = bool(np.all((side == 0) | (side == want)))
        except MeshError as err:
            scen = False
            problems.append(str(err))
        if not scen:
            problems.append("elements straddle the discrete interface")
    return ValidationReport(float(meas.min()), float(meas.max()), total, expected,
                            conforming, oriented, quasi, exact, scen, labeled, problems)


# ----------------------------------------------------------------------- I/O

def _format_mesh(mesh: SpaceTimeMesh) -> list[str]:
    lines = [f"stmesh {mesh.dim} {mesh.n_vertices} {mesh.n_elements}"]
    for v, m in zip(mesh.vertices, mesh.markers):
        lines.append(" ".join(format(float(c), ".17g") for c in v) + f" {m}")
    for e, r in zip(mesh.elements, mesh.regions):
        lines.append(" ".join(str(int(i)) for i in e) + f" {int(r)}")
    return lines


def export_mesh(mesh: SpaceTimeMesh, path, solution=None) -> None:
    """Write the line-oriented text format, optionally followed by nodal values."""
    if not np.all(np.isin(mesh.regions, (1, 2))):
        raise MeshError("cannot export a mesh with unlabeled elements")
    lines = _format_mesh(mesh)
    if solution is not None:
        solution = np.asarray(solution, dtype=float)
        if solution.shape != (mesh.n_vertices,):
            raise MeshError("solution must hold one value per vertex")
        lines.append(f"solution {mesh.n_vertices}")
        lines.extend(format(float(s), ".17g") for s in solution)
    Path(path).write_text("\n".join(lines) + "\n")


def _read(path):
    mesh_lines = [(n, ln.split()) for n, ln in
                  enumerate(Path(path).read_text().splitlines(), start=1)]
    return [(n, tok) for n, tok in mesh_lines if tok]


def _parse(path):
    lines = _read(path)
    if not lines:
        raise MeshError(f"{path}: empty file")
    pos = iter(lines)
    n, head = next(pos)
    if len(head) != 4 or head[0] != "stmesh":
        raise MeshError(f"line {n}: expected 'stmesh <d> <nv> <ne>'")
    try:
        d, nv, ne = (int(s) for s in head[1:])
    except ValueError:
        raise MeshError(f"line {n}: malformed header") from None
    if d not in (1, 2) or nv < 0 or ne < 0:
        raise MeshError(f"line {n}: malformed header")
    last = n

    def take(kind):
        nonlocal last
        try:
            n, tok = next(pos)
        except StopIteration:
            raise MeshError(f"line {last + 1}: expected {kind} line, got end of file") from None
        last = n
        return n, tok

    verts = np.empty((nv, d + 1))
    markers = []
    for k in range(nv):
        n, tok = take("vertex")
        if len(tok) != d + 2 or tok[-1] not in MARKERS:
            raise MeshError(f"line {n}: expected {d + 1} coordinates and a marker")
        try:
            verts[k] = [float(s) for s in tok[:-1]]
        except ValueError:
            raise MeshError(f"line {n}: bad coordinate") from None
        markers.append(tok[-1])

    elems = np.empty((ne, d + 2), dtype=np.int64)
    regions = np.empty(ne, dtype=np.int8)
    elem_lines = np.empty(ne, dtype=int)
    for k in range(ne):
        n, tok = take("element")
        if len(tok) != d + 3:
            raise MeshError(f"line {n}: expected {d + 2} vertex indices and a region")
        try:
            idx = [int(s) for s in tok[:-1]]
            reg = int(tok[-1])
        except ValueError:
            raise MeshError(f"line {n}: bad integer") from None
        if min(idx) < 0 or max(idx) >= nv:
            raise MeshError(f"line {n}: vertex index out of range [0, {nv})")
        if reg not in (1, 2):
            raise MeshError(f"line {n}: region label must be 1 or 2")
        elems[k], regions[k], elem_lines[k] = idx, reg, n

    mesh = SpaceTimeMesh(d, verts, elems, regions, np.array(markers, dtype="<U2"))
    meas = signed_measures(mesh)
    if ne and np.any(meas <= 0):
        k = int(np.flatnonzero(meas <= 0)[0])
        raise MeshError(f"line {elem_lines[k]}: element has non-positive measure")
    return mesh, list(pos), last


def import_mesh(path) -> SpaceTimeMesh:
    """Read a mesh written by :func:`export_mesh` (a trailing solution block is ignored)."""
    mesh, rest, _ = _parse(path)
    if rest and rest[0][1][0] != "solution":
        raise MeshError(f"line {rest[0][0]}: unexpected content after elements")
    return mesh


def import_solution(path):
    """Read a mesh plus its appended ``solution`` block."""
    mesh, rest, last = _parse(path)
    if not rest or rest[0][1][0] != "solution":
        raise MeshError(f"line {last + 1}: expected 'solution <nv>'")
    n, head = rest[0]
    if len(head) != 2 or int(head[1]) != mesh.n_vertices:
        raise MeshError(f"line {n}: solution block must hold {mesh.n_vertices} values")
    vals = rest[1:]
    if len(vals) != mesh.n_vertices:
        raise MeshError(f"line {vals[-1][0] + 1 if vals else n + 1}: solution block truncated")
    return mesh, np.array([float(tok[0]) for _, tok in vals])
