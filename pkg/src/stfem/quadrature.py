"""Symmetric barycentric quadrature rules on triangles and tetrahedra."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points (nq, dim+1) and weights summing to one.

    Multiply by the element measure to integrate over a physical simplex.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int


def _orbit(*bary):
    """Distinct permutations of one barycentric tuple."""
    return sorted(set(itertools.permutations(bary)))


def _rule(orbits, degree):
    pts, wts = [], []
    for bary, w in orbits:
        perms = _orbit(*bary)
        pts.extend(perms)
        wts.extend([w] * len(perms))
    return QuadratureRule(np.array(pts, dtype=float), np.array(wts, dtype=float), degree)


def _triangle_2():
    return _rule([((2 / 3, 1 / 6, 1 / 6), 1 / 3)], 2)


def _triangle_5():
    # 7-point Radon rule
    s = np.sqrt(15.0)
    a1, a2 = (6 - s) / 21, (6 + s) / 21
    return _rule([
        ((1 / 3, 1 / 3, 1 / 3), 9 / 40),
        ((1 - 2 * a1, a1, a1), (155 - s) / 1200),
        ((1 - 2 * a2, a2, a2), (155 + s) / 1200),
    ], 5)


def _tetrahedron_2():
    a = (5 - np.sqrt(5.0)) / 20
    return _rule([((1 - 3 * a, a, a, a), 1 / 4)], 2)


def _tetrahedron_5():
    # 14-point rule with positive weights, exact through degree 5
    a1, w1 = 0.09273525031089153, 0.07349304311636251
    a2, w2 = 0.3108859192633006, 0.11268792571801753
    b, w3 = 0.04550370412564763, 0.04254602077707996
    return _rule([
        ((1 - 3 * a1, a1, a1, a1), w1),
        ((1 - 3 * a2, a2, a2, a2), w2),
        ((0.5 - b, 0.5 - b, b, b), w3),
    ], 5)


_RULES = {
    (1, 2): _triangle_2,
    (1, 5): _triangle_5,
    (2, 2): _tetrahedron_2,
    (2, 4): _tetrahedron_5,
    (2, 5): _tetrahedron_5,
}


def quadrature(d: int, degree: int) -> QuadratureRule:
    """Rule on the (d+1)-simplex exact for polynomials of at least ``degree``."""
    try:
        return _RULES[(d, degree)]()
    except KeyError:
        supported = sorted(k for dd, k in _RULES if dd == d)
        raise ValueError(
            f"no quadrature of degree {degree} for d={d}; supported: {supported}") from None
