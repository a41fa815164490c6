import numpy as np
import pytest

from stfem import problems
from stfem.problems import (fd_divergence, fd_pde_operator, get_problem, interface_jumps,
                            source_oracle_error)

PI = np.pi


def test_coefficients():
    assert problems.example1().kappa == (0.5, 1.0)
    assert problems.example2().kappa == (0.5, 1.0)
    assert problems.example3_coefficients().kappa == (2.0, 1.0)
    assert problems.smooth_verification_3d().kappa == (1.0, 1.0)


def test_unknown_problem():
    with pytest.raises(ValueError, match="unknown problem"):
        get_problem("example9")


@pytest.mark.parametrize("name", ["example1", "example2"])
def test_homogeneous_data_1d(name):
    p = get_problem(name)
    x = np.linspace(0, 1, 51)[:, None]
    t = np.linspace(0, 1, 51)
    r = p.curves.region(x[:, 0], t)
    assert np.allclose(p.exact(x, np.zeros(51), r), 0, atol=1e-15)
    for wall in (0.0, 1.0):
        xw = np.full((51, 1), wall)
        assert np.allclose(p.exact(xw, t, np.full(51, 2, np.int8)), 0, atol=1e-12)


def test_smooth3d_homogeneous_data():
    p = problems.smooth_verification_3d()
    s = np.linspace(0, 1, 21)
    t = np.linspace(0, 1, 21)
    for pts in (np.stack([s * 0, s], 1), np.stack([s * 0 + 1, s], 1),
                np.stack([s, s * 0], 1), np.stack([s, s * 0 + 1], 1)):
        assert np.allclose(p.exact(pts, t), 0, atol=1e-15)
    assert np.allclose(p.exact(np.stack([s, s], 1), 0 * t), 0)


def test_curves():
    c = problems.example1().curves
    assert c.L1(np.array(0.5)) == pytest.approx(0.45)
    assert c.L2(np.array(1.0)) == pytest.approx(0.7)
    c2 = problems.example2().curves
    assert c2.L1(np.array(0.25)) == pytest.approx(0.45)
    assert c.region(np.array([0.5, 0.3, 0.9]), np.array([0.5, 0.5, 0.5])).tolist() == [1, 2, 2]


@pytest.mark.parametrize("name,pt,region", [
    ("example1", ((0.5,), 0.5), 1),
    ("example2", ((0.5,), 0.25), 1),
    ("smooth3d", ((0.5, 0.5), 0.5), 2),
])
def test_source_matches_fd_oracle_at_point(name, pt, region):
    p = get_problem(name)
    x, t = np.array([pt[0]]), np.array([pt[1]])
    r = np.array([region], np.int8)
    f = p.source(x, t, r)
    assert abs(f[0] - fd_pde_operator(p, x, t, r)[0]) <= 1e-6


def test_source_preserves_extended_precision():
    p = problems.example2()
    x = np.array([[0.5]], dtype=np.longdouble)
    t = np.array([0.25], dtype=np.longdouble)
    assert p.source(x, t, np.array([1])).dtype == np.longdouble


@pytest.mark.parametrize("name", ["example1", "example2", "smooth3d"])
def test_source_oracle_1000_points(name):
    assert source_oracle_error(get_problem(name), n=1000, seed=0) <= 1e-6


def test_interior_points_avoid_interfaces():
    p = problems.example2()
    x, t = problems.interior_points(p, n=500, seed=3)
    assert x.shape == (500, 1) and t.shape == (500,)
    for L in p.curves.curves():
        assert np.min(np.abs(x[:, 0] - L(t))) > 1e-3


def test_example2_branch_values_on_interfaces():
    p = problems.example2()
    t = np.linspace(0, 1, 17)
    L1 = p.curves.L1(t)
    one, two = np.ones(17, np.int8), np.full(17, 2, np.int8)
    expect = (np.sin(PI / 6) + np.sin(10 * PI * L1 - PI / 6)) * np.sin(PI * t / 2)
    assert np.allclose(p.exact(L1[:, None], t, one), expect, atol=1e-14)
    assert np.allclose(p.exact(L1[:, None], t, two), expect, atol=1e-14)
    L2 = p.curves.L2(t)[:, None]
    assert np.allclose(p.exact(L2, t, one), p.exact(L2, t, two), atol=1e-12)


def test_example2_flux_continuity_closed_form():
    p = problems.example2()
    t = np.array([0.3])
    x = p.curves.L1(t)[:, None]
    g1 = p.exact_grad(x, t, np.array([1]))[0, 0]
    g2 = p.exact_grad(x, t, np.array([2]))[0, 0]
    assert 0.5 * g1 == pytest.approx(1.0 * g2, abs=1e-12)
    assert g2 == pytest.approx(10 * PI * np.cos(PI / 6) * np.sin(0.15 * PI), rel=1e-13)


def test_interface_jumps_example2():
    ju, jf = interface_jumps(problems.example2(), n=100, seed=0)
    assert ju <= 1e-10 and jf <= 1e-8


def test_interface_jumps_need_curves():
    with pytest.raises(ValueError):
        interface_jumps(problems.smooth_verification_3d())


@pytest.mark.parametrize("name", ["example1", "example2", "smooth3d", "example3"])
def test_divergence_free(name):
    p = get_problem(name)
    rng = np.random.default_rng(1)
    x = rng.uniform(0.05, 0.95, (200, p.d))
    t = rng.uniform(0.05, 0.95, 200)
    assert np.max(np.abs(fd_divergence(p, x, t))) <= 1e-10


def test_example3_rotation_speed():
    p = problems.example3_coefficients()
    theta = np.linspace(0, 2 * PI, 13)
    for r in (0.1, 0.35, 0.5):
        x = np.stack([r * np.cos(theta), r * np.sin(theta)], 1)
        v = p.velocity(x, 0 * theta)
        assert np.allclose(np.linalg.norm(v, axis=1), 2 * PI * r, rtol=1e-14)
        assert np.allclose(np.sum(v * x, axis=1), 0, atol=1e-14)
    assert p.exact is None and p.source is None


def test_example1_global_formula_ignores_region():
    p = problems.example1()
    x, t = np.array([[0.3], [0.5]]), np.array([0.4, 0.4])
    assert np.array_equal(p.exact(x, t, np.array([1, 1])), p.exact(x, t, np.array([2, 2])))


def test_with_source_replaces_only_source():
    p = problems.example1()
    q = p.with_source(None)
    assert q.source is None and q.exact is p.exact and q.curves is p.curves
