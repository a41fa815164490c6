"""P1 space-time element matrices and global assembly.

The discrete form on an element K, for trial function phi_j and test
function phi_i, is

    int_K (d_t phi_j + v . grad_x phi_j) phi_i + kappa grad_x phi_j . grad_x phi_i

with kappa the value of the element's region.  Rows are test functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .mesh import CONSTRAINED, INITIAL, LATERAL, MeshError, SNAP_TOL, SpaceTimeMesh
from .quadrature import QuadratureRule, quadrature

ASSEMBLY_DEGREE = 2
LOAD_DEGREE = {1: 5, 2: 4}


@dataclass(frozen=True)
class ElementMatrices:
    A_local: np.ndarray
    b_local: np.ndarray


@dataclass(frozen=True)
class SparseSystem:
    """Reduced system on the free nodes; ``free_nodes[k]`` is the vertex of unknown k."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    free_nodes: np.ndarray
    n_vertices: int

    @property
    def dof(self) -> int:
        return len(self.free_nodes)

    def expand(self, x) -> np.ndarray:
        """Nodal vector over all vertices with zeros at constrained nodes."""
        full = np.zeros(self.n_vertices)
        full[self.free_nodes] = x
        return full

    def restrict(self, nodal) -> np.ndarray:
        return np.asarray(nodal)[self.free_nodes]

    def dump(self, path) -> None:
        """Matrix Market coordinate dump of the matrix (debugging aid)."""
        scipy.io.mmwrite(str(path), self.matrix.tocoo())


def geometry(coords: np.ndarray):
    """Measures and barycentric gradients of simplices.

    ``coords`` has shape (ne, d+2, d+1).  Returns measures (ne,) and
    gradients (ne, d+2, d+1), the last component being the time derivative.
    """
    n = coords.shape[-1]
    J = coords[:, 1:, :] - coords[:, :1, :]
    meas = np.linalg.det(J) / math.factorial(n)
    _check_nondegenerate(coords, meas)
    G = np.linalg.inv(np.transpose(J, (0, 2, 1)))
    grads = np.concatenate([-G.sum(axis=1, keepdims=True), G], axis=1)
    return meas, grads


def _check_nondegenerate(coords, meas):
    diam = np.zeros(len(coords))
    m = coords.shape[1]
    for i in range(m):
        for j in range(i + 1, m):
            diam = np.maximum(diam, np.linalg.norm(coords[:, i] - coords[:, j], axis=1))
    bad = meas <= 1e-14 * diam ** coords.shape[-1]
    if np.any(bad):
        e = int(np.flatnonzero(bad)[0])
        raise MeshError(f"element {e} is degenerate or inverted (measure {meas[e]:.3g})")


def quadrature_points(coords: np.ndarray, rule: QuadratureRule):
    """Physical quadrature points (ne, nq, d+1)."""
    return np.einsum("qk,ekc->eqc", rule.points, coords)


def local_matrices(coords, kappa, velocity, rule: QuadratureRule):
    """Vectorised element matrices for all elements, shape (ne, d+2, d+2)."""
    d = coords.shape[-1] - 1
    meas, grads = geometry(coords)
    gx, gt = grads[..., :d], grads[..., d]
    m = d + 2

    time = np.repeat((meas / m)[:, None] * gt, m, axis=0).reshape(-1, m, m)
    diff = (np.asarray(kappa) * meas)[:, None, None] * np.einsum("eid,ejd->eij", gx, gx)

    pts = quadrature_points(coords, rule)
    ne, nq = pts.shape[:2]
    flat = pts.reshape(-1, d + 1)
    v = np.asarray(velocity(flat[:, :d], flat[:, d]), dtype=float).reshape(ne, nq, d)
    vg = np.einsum("eqd,ejd->eqj", v, gx)
    adv = meas[:, None, None] * np.einsum("q,qi,eqj->eij", rule.weights, rule.points, vg)
    return time + adv + diff


def local_loads(coords, source_at, rule: QuadratureRule):
    """Element load vectors int_K f phi_i, shape (ne, d+2).

    ``source_at(points)`` receives physical points of shape (ne, nq, d+1).
    """
    meas, _ = geometry(coords)
    f = source_at(quadrature_points(coords, rule))
    return meas[:, None] * np.einsum("q,qi,eq->ei", rule.weights, rule.points, f)


def element_matrices(vertices, kappa: float, velocity, quad: QuadratureRule | None = None,
                     source=None) -> ElementMatrices:
    """Local matrix (and load, when ``source(x, t)`` is given) of one simplex."""
    coords = np.asarray(vertices, dtype=float)[None]
    d = coords.shape[-1] - 1
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    quad = quad or quadrature(d, ASSEMBLY_DEGREE)
    A = local_matrices(coords, [kappa], velocity, quad)[0]
    if source is None:
        b = np.zeros(d + 2)
    else:
        def at(p):
            flat = p.reshape(-1, d + 1)
            return np.asarray(source(flat[:, :d], flat[:, d])).reshape(p.shape[:2])
        b = local_loads(coords, at, quadrature(d, LOAD_DEGREE[d]))[0]
    return ElementMatrices(A, b)


def free_nodes(mesh: SpaceTimeMesh) -> np.ndarray:
    return np.flatnonzero(~np.isin(mesh.markers, CONSTRAINED))


def _check_markers(mesh: SpaceTimeMesh):
    d = mesh.dim
    x, t = mesh.vertices[:, :d], mesh.vertices[:, d]
    on_lateral = np.any((np.abs(x) <= SNAP_TOL) | (np.abs(x - 1) <= SNAP_TOL), axis=1)
    on_initial = (np.abs(t) <= SNAP_TOL) & ~on_lateral
    lateral = mesh.markers == LATERAL
    initial = mesh.markers == INITIAL
    if np.any(on_lateral != lateral) or np.any(on_initial != initial):
        bad = np.flatnonzero((on_lateral != lateral) | (on_initial != initial))[0]
        raise MeshError(
            f"vertex {bad} marker {mesh.markers[bad]!r} inconsistent with its position")


def _scatter(mesh, local):
    m = mesh.dim + 2
    rows = np.repeat(mesh.elements, m, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, m)).ravel()
    n = mesh.n_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble(mesh: SpaceTimeMesh, problem, quad: QuadratureRule | None = None,
             load_quad: QuadratureRule | None = None) -> SparseSystem:
    """Assemble the reduced Galerkin system with homogeneous lateral and
    initial data.  Final-time nodes remain unknowns."""
    if not np.all(np.isin(mesh.regions, (1, 2))):
        raise MeshError("assembly requires a classified mesh (region labels 1/2)")
    if mesh.dim != problem.d:
        raise ValueError(f"mesh dimension {mesh.dim} != problem dimension {problem.d}")
    if problem.source is None:
        raise ValueError(f"{problem.name} has no source term")
    _check_markers(mesh)
    d = mesh.dim
    quad = quad or quadrature(d, ASSEMBLY_DEGREE)
    load_quad = load_quad or quadrature(d, LOAD_DEGREE[d])

    coords = mesh.coords()
    kappa = np.where(mesh.regions == 1, problem.kappa1, problem.kappa2)
    A = _scatter(mesh, local_matrices(coords, kappa, problem.velocity, quad))

    def source_at(pts):
        ne, nq = pts.shape[:2]
        flat = pts.reshape(-1, d + 1)
        x, t = flat[:, :d], flat[:, d]
        region = problem.region(x, t)
        if region is None:
            region = np.repeat(mesh.regions, nq)
        return np.asarray(problem.source(x, t, region), dtype=float).reshape(ne, nq)

    loads = local_loads(coords, source_at, load_quad)
    b = np.zeros(mesh.n_vertices)
    np.add.at(b, mesh.elements.ravel(), loads.ravel())

    free = free_nodes(mesh)
    Ar = A[free][:, free].tocsr()
    Ar.sort_indices()
    return SparseSystem(Ar, b[free], free, mesh.n_vertices)


def interpolate_exact(mesh: SpaceTimeMesh, problem) -> np.ndarray:
    """Exact solution at the mesh vertices."""
    if problem.exact is None:
        raise ValueError(f"{problem.name} has no exact solution")
    d = mesh.dim
    x, t = mesh.vertices[:, :d], mesh.vertices[:, d]
    region = problem.region(x, t)
    if region is None:
        region = np.full(mesh.n_vertices, 2, dtype=np.int8)
    return np.asarray(problem.exact(x, t, region), dtype=float)
