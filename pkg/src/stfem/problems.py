"""Built-in moving-interface advection-diffusion problems.

Every problem bundles coefficients, a divergence-free velocity field, the
interface curves (one spatial dimension only) and, where available, a
manufactured exact solution with the matching source term.

All callables take ``x`` of shape ``(n, d)`` and ``t`` of shape ``(n,)`` and
keep the floating dtype of their inputs, so they can be evaluated in
``np.longdouble`` by the finite-difference oracles.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

PI = np.pi

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]
RegionField = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class InterfaceCurves:
    """Two interface points moving with a common shift ``w(t)`` (d = 1).

    ``L1(t) = x1 + w(t)`` and ``L2(t) = x2 + w(t)``; region 1 is the strip
    between them.
    """

    x1: float
    x2: float
    shift: Callable[[np.ndarray], np.ndarray]
    shift_rate: Callable[[np.ndarray], np.ndarray]

    def L1(self, t):
        return self.x1 + self.shift(t)

    def L2(self, t):
        return self.x2 + self.shift(t)

    def curves(self):
        return (self.L1, self.L2)

    def region(self, x, t):
        """Analytic region label (1 between the curves, 2 outside)."""
        x = np.asarray(x)
        inside = (x > self.L1(t)) & (x < self.L2(t))
        return np.where(inside, 1, 2).astype(np.int8)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    d: int
    T: float
    kappa1: float
    kappa2: float
    velocity: Field
    source: RegionField | None
    curves: InterfaceCurves | None = None
    exact: RegionField | None = None
    exact_grad: RegionField | None = None

    @property
    def kappa(self) -> tuple[float, float]:
        return (self.kappa1, self.kappa2)

    def region(self, x, t):
        """Analytic region at the points, or None when undefined."""
        if self.curves is None:
            return None
        return self.curves.region(np.asarray(x)[:, 0], t)

    def with_source(self, source: RegionField | None) -> "ProblemSpec":
        return ProblemSpec(self.name, self.d, self.T, self.kappa1, self.kappa2,
                           self.velocity, source, self.curves, self.exact,
                           self.exact_grad)


def _time_factor(t):
    return np.sin(PI * t / 2), (PI / 2) * np.cos(PI * t / 2)


def _kappa_of(region, k1, k2):
    return np.where(np.asarray(region) == 1, k1, k2)


# ---------------------------------------------------------------- example 1

def example1() -> ProblemSpec:
    """Planar space-time interface, constant velocity 0.1."""
    k1, k2 = 0.5, 1.0
    vel = 0.1
    curves = InterfaceCurves(0.4, 0.6, shift=lambda t: vel * t,
                             shift_rate=lambda t: vel + 0 * t)
    a = 10 * PI

    def exact(x, t, region=None):
        s, _ = _time_factor(t)
        L = curves.L1(t)
        return (np.cos(a * (x[:, 0] - L)) - np.cos(a * L)) * s

    def exact_grad(x, t, region=None):
        s, _ = _time_factor(t)
        theta = a * (x[:, 0] - curves.L1(t))
        return (-a * np.sin(theta) * s)[:, None]

    def source(x, t, region):
        s, ds = _time_factor(t)
        L = curves.L1(t)
        Ld = curves.shift_rate(t)
        theta = a * (x[:, 0] - L)
        ut = a * Ld * (np.sin(theta) + np.sin(a * L)) * s \
            + (np.cos(theta) - np.cos(a * L)) * ds
        ux = -a * np.sin(theta) * s
        uxx = -a * a * np.cos(theta) * s
        return ut + vel * ux - _kappa_of(region, k1, k2) * uxx

    def velocity(x, t):
        return vel + 0 * x

    return ProblemSpec("example1", 1, 1.0, k1, k2, velocity, source, curves,
                       exact, exact_grad)


# ---------------------------------------------------------------- example 2

def example2() -> ProblemSpec:
    """Sinusoidal space-time interface driven by v = 0.1 pi cos(2 pi t).

    The exact solution has a gradient jump across the interface; region 1
    oscillates with frequency 20 pi, region 2 with 10 pi.
    """
    k1, k2 = 0.5, 1.0
    curves = InterfaceCurves(
        0.4, 0.6,
        shift=lambda t: 0.05 * np.sin(2 * PI * t),
        shift_rate=lambda t: 0.1 * PI * np.cos(2 * PI * t),
    )
    phase = PI / 6

    def freq(region):
        return np.where(np.asarray(region) == 1, 20 * PI, 10 * PI)

    def exact(x, t, region):
        s, _ = _time_factor(t)
        L = curves.L1(t)
        a = freq(region)
        return (np.sin(a * (x[:, 0] - L) + phase) + np.sin(10 * PI * L - phase)) * s

    def exact_grad(x, t, region):
        s, _ = _time_factor(t)
        a = freq(region)
        theta = a * (x[:, 0] - curves.L1(t)) + phase
        return (a * np.cos(theta) * s)[:, None]

    def source(x, t, region):
        s, ds = _time_factor(t)
        L = curves.L1(t)
        Ld = curves.shift_rate(t)
        a = freq(region)
        theta = a * (x[:, 0] - L) + phase
        psi = 10 * PI * L - phase
        ut = (-a * Ld * np.cos(theta) + 10 * PI * Ld * np.cos(psi)) * s \
            + (np.sin(theta) + np.sin(psi)) * ds
        ux = a * np.cos(theta) * s
        uxx = -a * a * np.sin(theta) * s
        return ut + curves.shift_rate(t) * ux - _kappa_of(region, k1, k2) * uxx

    def velocity(x, t):
        return (curves.shift_rate(t) + 0 * x[:, 0])[:, None]

    return ProblemSpec("example2", 1, 1.0, k1, k2, velocity, source, curves,
                       exact, exact_grad)


# ------------------------------------------------------------ d = 2 problems

def example3_coefficients(source: RegionField | None = None) -> ProblemSpec:
    """Rotating inclusion: coefficients and velocity only.

    There is no exact solution; the source is a user hook and region labels
    come from an imported fitted mesh.
    """
    def velocity(x, t):
        return np.stack([-2 * PI * x[:, 1], 2 * PI * x[:, 0]], axis=1)

    return ProblemSpec("example3", 2, 1.0, 2.0, 1.0, velocity, source)


def smooth_verification_3d() -> ProblemSpec:
    """Smooth rigid-rotation problem on (0,1)^2 x (0,1) without interface."""

    def velocity(x, t):
        return np.stack([-2 * PI * x[:, 1] + PI, 2 * PI * x[:, 0] - PI], axis=1)

    def exact(x, t, region=None):
        s, _ = _time_factor(t)
        return np.sin(PI * x[:, 0]) * np.sin(PI * x[:, 1]) * s

    def exact_grad(x, t, region=None):
        s, _ = _time_factor(t)
        sx, sy = np.sin(PI * x[:, 0]), np.sin(PI * x[:, 1])
        cx, cy = np.cos(PI * x[:, 0]), np.cos(PI * x[:, 1])
        return PI * np.stack([cx * sy * s, sx * cy * s], axis=1)

    def source(x, t, region=None):
        s, ds = _time_factor(t)
        v = velocity(x, t)
        g = exact_grad(x, t)
        u = np.sin(PI * x[:, 0]) * np.sin(PI * x[:, 1])
        return u * ds + np.sum(v * g, axis=1) + 2 * PI * PI * u * s

    return ProblemSpec("smooth3d", 2, 1.0, 1.0, 1.0, velocity, source,
                       exact=exact, exact_grad=exact_grad)


PROBLEMS = {
    "example1": example1,
    "example2": example2,
    "smooth3d": smooth_verification_3d,
    "example3": example3_coefficients,
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


# ------------------------------------------------------------------ oracles

def _central_stencils(func, x, t, axis, h):
    """Fourth-order central first/second derivative along one coordinate.

    ``axis`` < d selects a spatial coordinate; ``axis == d`` selects time.
    """
    d = x.shape[1]

    def shifted(k):
        xs, ts = x.copy(), t.copy()
        if axis < d:
            xs[:, axis] += k * h
        else:
            ts = ts + k * h
        return func(xs, ts)

    fm2, fm1, f0, fp1, fp2 = (shifted(k) for k in (-2, -1, 0, 1, 2))
    first = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
    second = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)
    return first, second


def fd_pde_operator(problem: ProblemSpec, x, t, region, step=1e-5):
    """Apply du/dt + v.grad u - kappa lap u to the exact solution by differences.

    Evaluated in extended precision with a fixed solution branch, so the
    stencil may cross the interface without polluting the result.
    """
    x = np.asarray(x, dtype=np.longdouble)
    t = np.asarray(t, dtype=np.longdouble)
    region = np.asarray(region)
    h = np.longdouble(step)

    def u(xs, ts):
        return problem.exact(xs, ts, region)

    d = problem.d
    ut, _ = _central_stencils(u, x, t, d, h)
    v = problem.velocity(x, t)
    adv = np.zeros_like(ut)
    lap = np.zeros_like(ut)
    for k in range(d):
        first, second = _central_stencils(u, x, t, k, h)
        adv += v[:, k] * first
        lap += second
    kap = _kappa_of(region, problem.kappa1, problem.kappa2)
    return (ut + adv - kap * lap).astype(float)


def fd_divergence(problem: ProblemSpec, x, t, step=1e-5):
    x = np.asarray(x, dtype=np.longdouble)
    t = np.asarray(t, dtype=np.longdouble)
    h = np.longdouble(step)
    div = np.zeros(len(t), dtype=np.longdouble)
    for k in range(problem.d):
        xp, xm = x.copy(), x.copy()
        xp[:, k] += h
        xm[:, k] -= h
        div += (problem.velocity(xp, t)[:, k] - problem.velocity(xm, t)[:, k]) / (2 * h)
    return div.astype(float)


def interior_points(problem: ProblemSpec, n=1000, seed=0, band=1e-3):
    """Quasi-random interior points of Q_T away from lateral boundaries and interfaces."""
    from scipy.stats import qmc

    sampler = qmc.Halton(d=problem.d + 1, scramble=True, seed=seed)
    pts = []
    collected = 0
    while collected < n:
        p = sampler.random(2 * n)
        p[:, -1] *= problem.T
        keep = np.all((p[:, :-1] > band) & (p[:, :-1] < 1 - band), axis=1)
        keep &= (p[:, -1] > band) & (p[:, -1] < problem.T - band)
        if problem.curves is not None:
            for L in problem.curves.curves():
                keep &= np.abs(p[:, 0] - L(p[:, -1])) > band
        pts.append(p[keep])
        collected += int(keep.sum())
    p = np.concatenate(pts)[:n]
    return p[:, :-1], p[:, -1]


def source_oracle_error(problem: ProblemSpec, n=1000, seed=0, step=1e-5) -> float:
    """Max |f - FD operator(u)| over quasi-random interior points."""
    x, t = interior_points(problem, n, seed)
    region = problem.region(x, t)
    if region is None:
        region = np.full(len(t), 2, dtype=np.int8)
    f = problem.source(x, t, region)
    return float(np.max(np.abs(f - fd_pde_operator(problem, x, t, region, step))))


def interface_jumps(problem: ProblemSpec, n=100, seed=0):
    """Max |[u]| and |[kappa du/dx n]| over sampled interface points (d = 1)."""
    if problem.curves is None:
        raise ValueError(f"{problem.name} has no interface")
    rng = np.random.default_rng(seed)
    t = rng.uniform(0, problem.T, n)
    jump_u = jump_flux = 0.0
    for L in problem.curves.curves():
        x = L(t)[:, None]
        one = np.ones(n, dtype=np.int8)
        two = 2 * one
        du = problem.exact(x, t, one) - problem.exact(x, t, two)
        dflux = problem.kappa1 * problem.exact_grad(x, t, one)[:, 0] \
            - problem.kappa2 * problem.exact_grad(x, t, two)[:, 0]
        jump_u = max(jump_u, float(np.max(np.abs(du))))
        jump_flux = max(jump_flux, float(np.max(np.abs(dflux))))
    return jump_u, jump_flux
