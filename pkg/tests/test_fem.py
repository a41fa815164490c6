from dataclasses import replace

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from stfem import fem
from stfem.mesh import MeshError, generate_fitted_mesh_1d, kuhn_cube_mesh
from stfem.problems import ProblemSpec
from stfem.quadrature import quadrature
from stfem.solver import solve

REF_TRI = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]


def zero_velocity(x, t):
    return np.zeros_like(x)


def test_reference_triangle_diffusion_and_time_parts():
    em = fem.element_matrices(REF_TRI, 1.0, zero_velocity)
    time_part = np.tile([-1 / 6, 0.0, 1 / 6], (3, 1))
    diffusion = 0.5 * np.array([[1, -1, 0], [-1, 1, 0], [0, 0, 0]])
    assert np.allclose(em.A_local, time_part + diffusion, atol=1e-15)
    assert np.array_equal(em.b_local, np.zeros(3))


def test_zero_kappa_leaves_time_part():
    em = fem.element_matrices(REF_TRI, 0.0, zero_velocity)
    assert np.allclose(em.A_local, np.tile([-1 / 6, 0.0, 1 / 6], (3, 1)), atol=1e-15)


def test_spatial_parts_annihilate_constants():
    tri = [(0.1, 0.2), (0.7, 0.1), (0.3, 0.9)]
    full = fem.element_matrices(tri, 0.7, lambda x, t: 0.3 + 0 * x).A_local
    time = fem.element_matrices(tri, 0.0, zero_velocity).A_local
    assert np.allclose((full - time) @ np.ones(3), 0.0, atol=1e-14)


def _sympy_element(verts, kappa, vel):
    """Exact element matrix by symbolic integration over the simplex."""
    n = len(verts) - 1
    ls = sympy.symbols(f"l1:{n + 1}")
    lam = [1 - sum(ls)] + list(ls)
    P = sympy.Matrix(verts)
    X = [sum(lam[k] * P[k, c] for k in range(n + 1)) for c in range(n)]
    J = sympy.Matrix([[P[k, c] - P[0, c] for c in range(n)] for k in range(1, n + 1)])
    G = J.T.inv()
    grads = [-sum((G.row(i) for i in range(n)), sympy.zeros(1, n))] + [G.row(i) for i in range(n)]
    jac = abs(J.det())
    v = vel(X)

    def integrate(expr):
        for k in reversed(range(n)):
            upper = 1 - sum(ls[:k])
            expr = sympy.integrate(expr, (ls[k], 0, upper))
        return expr * jac

    A = sympy.zeros(n + 1, n + 1)
    for i in range(n + 1):
        for j in range(n + 1):
            gx_i, gx_j = grads[i][:n - 1], grads[j][:n - 1]
            integrand = lam[i] * (grads[j][n - 1] + sum(v[c] * gx_j[c] for c in range(n - 1)))
            integrand += kappa * sum(gx_i[c] * gx_j[c] for c in range(n - 1))
            A[i, j] = integrate(sympy.expand(integrand))
    return np.array(A.evalf(), dtype=float)


def test_triangle_matches_symbolic_integration():
    R = sympy.Rational
    verts = [(R(1, 10), R(1, 5)), (R(7, 10), R(1, 10)), (R(3, 10), R(9, 10))]
    kappa = R(1, 2)
    exact = _sympy_element(verts, kappa, lambda X: [R(3, 10)])
    em = fem.element_matrices(np.array(verts, dtype=float), 0.5, lambda x, t: 0.3 + 0 * x)
    assert np.allclose(em.A_local, exact, rtol=1e-13, atol=1e-15)


def test_tetrahedron_with_linear_velocity_matches_symbolic_integration():
    R = sympy.Rational
    verts = [(R(1, 10), R(1, 5), R(0)), (R(4, 5), R(1, 10), R(1, 5)),
             (R(3, 10), R(9, 10), R(1, 10)), (R(2, 5), R(2, 5), R(7, 10))]
    pi = sympy.pi
    exact = _sympy_element(verts, 2, lambda X: [-2 * pi * X[1] + pi, 2 * pi * X[0] - pi])
    em = fem.element_matrices(
        np.array(verts, dtype=float), 2.0,
        lambda x, t: np.stack([-2 * np.pi * x[:, 1] + np.pi, 2 * np.pi * x[:, 0] - np.pi], 1))
    # degree-2 quadrature is exact for linear velocity times linear basis
    assert np.allclose(em.A_local, exact, rtol=1e-13, atol=1e-14)


def test_element_load_constant_source():
    em = fem.element_matrices(REF_TRI, 1.0, zero_velocity, source=lambda x, t: 2.0 + 0 * t)
    assert np.allclose(em.b_local, 2.0 * 0.5 / 3)


def test_degenerate_element_rejected():
    with pytest.raises(MeshError, match="degenerate"):
        fem.element_matrices([(0, 0), (1, 1), (2, 2)], 1.0, zero_velocity)


# ------------------------------------------------------------------ assembly

def test_reduced_dimension(ex1, ex1_mesh10):
    system = fem.assemble(ex1_mesh10, ex1)
    assert system.dof == 121 - 22 - 9 == 90
    assert system.matrix.shape == (90, 90)
    A = system.matrix
    assert A.has_sorted_indices
    assert A.indices.min() >= 0 and A.indices.max() < 90


def test_final_time_nodes_are_unknowns(ex1, ex1_mesh10):
    system = fem.assemble(ex1_mesh10, ex1)
    t = ex1_mesh10.vertices[system.free_nodes, 1]
    assert np.sum(t == 1.0) == 9
    assert np.all(t > 0)


def test_zero_source_gives_zero_solution(ex1, ex1_mesh10):
    prob = ex1.with_source(lambda x, t, region: 0 * t)
    system = fem.assemble(ex1_mesh10, prob)
    assert not np.any(system.rhs)
    assert not np.any(solve(system).solution)


@pytest.mark.parametrize("name,N", [("example1", 10), ("example1", 20), ("example2", 10)])
def test_matrix_is_nonsymmetric(name, N):
    from stfem.problems import get_problem
    prob = get_problem(name)
    A = fem.assemble(generate_fitted_mesh_1d(N, prob.curves), prob).matrix
    assert abs(A - A.T).max() > 0.01


def test_assembly_load_matches_manual_sum(ex1, ex1_mesh10):
    """rhs entry equals the sum of element loads over the vertex star."""
    system = fem.assemble(ex1_mesh10, ex1)
    q = quadrature(1, 5)
    node = system.free_nodes[17]
    total = 0.0
    for e, tri in enumerate(ex1_mesh10.elements):
        if node not in tri:
            continue
        i = list(tri).index(node)
        coords = ex1_mesh10.vertices[tri]
        area = 0.5 * abs(np.linalg.det(coords[1:] - coords[0]))
        pts = q.points @ coords
        region = ex1.curves.region(pts[:, 0], pts[:, 1])
        total += area * np.sum(q.weights * q.points[:, i]
                               * ex1.source(pts[:, :1], pts[:, 1], region))
    assert system.rhs[17] == pytest.approx(total, rel=1e-13)


@settings(max_examples=15, deadline=None)
@given(st.randoms(use_true_random=False))
def test_assembly_independent_of_element_order(rnd):
    from stfem.problems import example2
    prob = example2()
    m = generate_fitted_mesh_1d(10, prob.curves)
    perm = list(range(m.n_elements))
    rnd.shuffle(perm)
    shuffled = replace(m, elements=m.elements[perm], regions=m.regions[perm])
    a, b = fem.assemble(m, prob), fem.assemble(shuffled, prob)
    assert abs(a.matrix - b.matrix).max() <= 1e-13
    assert np.max(np.abs(a.rhs - b.rhs)) <= 1e-13


def test_kuhn_diffusion_block_is_standard_stiffness(smooth):
    """With kappa1 = kappa2 and no advection the spatial block is symmetric and
    agrees with a stiffness matrix built from per-element linear solves."""
    m = kuhn_cube_mesh(3)
    coords = m.coords()
    k1 = fem.local_matrices(coords, np.ones(m.n_elements), lambda x, t: 0 * x, quadrature(2, 2))
    k0 = fem.local_matrices(coords, np.zeros(m.n_elements), lambda x, t: 0 * x, quadrature(2, 2))
    block = k1 - k0
    for K, P in zip(block[:40], coords[:40]):
        # gradient of each hat function from its nodal interpolation conditions
        M = np.column_stack([np.ones(4), P])
        C = np.linalg.solve(M, np.eye(4))
        gx = C[1:3].T
        vol = abs(np.linalg.det(P[1:] - P[0])) / 6
        assert np.allclose(K, vol * gx @ gx.T, atol=1e-14)
    assert np.allclose(block, np.transpose(block, (0, 2, 1)), atol=1e-15)
    assert np.allclose(block.sum(axis=2), 0.0, atol=1e-13)


def test_unclassified_mesh_rejected(ex1, ex1_mesh10):
    raw = replace(ex1_mesh10, regions=np.zeros(ex1_mesh10.n_elements, np.int8))
    with pytest.raises(MeshError, match="classified"):
        fem.assemble(raw, ex1)


def test_marker_inconsistency_rejected(ex1, ex1_mesh10):
    markers = ex1_mesh10.markers.copy()
    markers[0] = "i"
    with pytest.raises(MeshError, match="marker"):
        fem.assemble(replace(ex1_mesh10, markers=markers), ex1)


def test_galerkin_residual(ex2, ex2_mesh20):
    system = fem.assemble(ex2_mesh20, ex2)
    x = solve(system).solution
    A, b = system.matrix, system.rhs
    r = np.max(np.abs(A @ x - b))
    assert r <= 1e-9 * (abs(A).max() * np.max(np.abs(x)) + np.max(np.abs(b)))


def test_expand_restrict_round_trip(ex1, ex1_mesh10):
    system = fem.assemble(ex1_mesh10, ex1)
    y = np.arange(system.dof, dtype=float)
    full = system.expand(y)
    assert np.array_equal(system.restrict(full), y)
    assert np.count_nonzero(full == 0) >= ex1_mesh10.n_vertices - system.dof


def test_dump_matrix_market(tmp_path, ex1, ex1_mesh10):
    import scipy.io
    system = fem.assemble(ex1_mesh10, ex1)
    system.dump(tmp_path / "A.mtx")
    back = scipy.io.mmread(str(tmp_path / "A.mtx"))
    assert abs(back.tocsr() - system.matrix).max() == 0


# ------------------------------------------------------------- interpolation

def test_interpolant_vanishes_at_initial_time_and_walls(ex1, ex1_mesh10):
    u = fem.interpolate_exact(ex1_mesh10, ex1)
    x, t = ex1_mesh10.vertices.T
    assert np.allclose(u[t == 0], 0.0, atol=1e-15)
    assert np.allclose(u[(x == 0) | (x == 1)], 0.0, atol=1e-12)


def test_interface_branches_agree_at_vertices(ex2, ex2_mesh20):
    x, t = ex2_mesh20.vertices[ex2_mesh20.markers == "if"].T
    one = np.ones(len(t), np.int8)
    a = ex2.exact(x[:, None], t, one)
    b = ex2.exact(x[:, None], t, 2 * one)
    assert np.max(np.abs(a - b)) <= 1e-12


def test_interpolation_requires_exact_solution(ex1_mesh10):
    from stfem.problems import example3_coefficients
    with pytest.raises(ValueError):
        fem.interpolate_exact(kuhn_cube_mesh(2), example3_coefficients())


def test_assembly_d2_with_user_source(tmp_path):
    from stfem.problems import example3_coefficients
    prob = example3_coefficients(source=lambda x, t, region: np.ones(len(t)))
    m = kuhn_cube_mesh(3)
    system = fem.assemble(m, prob)
    rep = solve(system)
    assert rep.relative_residual <= 1e-10
    assert isinstance(prob, ProblemSpec) and prob.kappa == (2.0, 1.0)
