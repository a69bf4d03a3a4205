"""Reference quadrature rules for pairs of triangles.

Both panels are parametrized over T = {0 <= r2 <= r1 <= 1} by
``x = (1 - r1) x1 + (r1 - r2) x2 + r2 x3``.  A pair rule is an array of
points (r1x, r2x, r1y, r2y) with weights integrating over T x T.  Singular
rules use the relative-coordinate transformations of Sauter and Schwab:
the pair must be ordered so that shared vertices come first (x1 = y1 for a
shared vertex, x1 = y1 and x2 = y2 for a shared edge).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

REGULAR, VERTEX, EDGE, COINCIDENT = 0, 1, 2, 3


def gauss_01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def _bary_to_ref(bary):
    bary = np.asarray(bary, dtype=float)
    return np.stack([1 - bary[:, 0], bary[:, 2]], axis=1)


def _orbit3(a, b):
    return [(a, b, b), (b, a, b), (b, b, a)]


@lru_cache(maxsize=None)
def triangle_rule(npts: int):
    """Symmetric rules on T with 3 (degree 2) or 6 (degree 4) points."""
    if npts == 1:
        return np.array([[2 / 3, 1 / 3]]), np.array([0.5])
    if npts == 3:
        bary = _orbit3(2 / 3, 1 / 6)
        w = np.full(3, 1 / 6)
    elif npts == 6:
        a1, a2 = 0.445948490915965, 0.091576213509771
        bary = _orbit3(1 - 2 * a1, a1) + _orbit3(1 - 2 * a2, a2)
        w = 0.5 * np.array([0.223381589678011] * 3 + [0.109951743655322] * 3)
    else:
        raise ValueError("triangle rules exist for 1, 3 or 6 points")
    return _bary_to_ref(bary), w


@lru_cache(maxsize=None)
def regular_pair_rule(npts: int):
    p, w = triangle_rule(npts)
    i, j = np.meshgrid(np.arange(len(w)), np.arange(len(w)), indexing="ij")
    pts = np.concatenate([p[i.ravel()], p[j.ravel()]], axis=1)
    return pts, (w[i] * w[j]).ravel()


def _cube4(order: int):
    g, w = gauss_01(order)
    grids = np.meshgrid(g, g, g, g, indexing="ij")
    wts = np.meshgrid(w, w, w, w, indexing="ij")
    pts = [a.ravel() for a in grids]
    return pts, np.prod([a.ravel() for a in wts], axis=0)


@lru_cache(maxsize=None)
def singular_pair_rule(case: int, order: int = 4):
    """Pair rule for coincident, edge-adjacent or vertex-adjacent panels."""
    (xi, e1, e2, e3), w0 = _cube4(order)
    blocks = []
    if case == COINCIDENT:
        jac = xi ** 3 * e1 ** 2 * e2
        # each (x, y) pair also contributes with x and y exchanged
        for x1, x2, y1, y2 in (
            (xi, xi * (1 - e1 + e1 * e2), xi * (1 - e1 * e2 * e3), xi * (1 - e1)),
            (xi, xi * e1 * (1 - e2 + e2 * e3), xi * (1 - e1 * e2), xi * e1 * (1 - e2)),
            (xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), xi, xi * e1 * (1 - e2)),
        ):
            blocks.append((np.stack([x1, x2, y1, y2], 1), jac))
            blocks.append((np.stack([y1, y2, x1, x2], 1), jac))
    elif case == EDGE:
        j1 = xi ** 3 * e1 ** 2
        j2 = xi ** 3 * e1 ** 2 * e2
        for w, jac in (
            ((xi, -xi * e1 * e2, xi * e1 * (1 - e2), xi * e1 * e3), j1),
            ((xi, -xi * e1 * e2 * e3, xi * e1 * e2 * (1 - e3), xi * e1), j2),
            ((xi * (1 - e1 * e2), xi * e1 * e2, xi * e1 * e2 * e3, xi * e1 * (1 - e2)), j2),
            ((xi * (1 - e1 * e2 * e3), xi * e1 * e2 * e3, xi * e1, xi * e1 * e2 * (1 - e3)), j2),
            ((xi * (1 - e1 * e2 * e3), xi * e1 * e2 * e3, xi * e1 * e2, xi * e1 * (1 - e2 * e3)), j2),
        ):
            r1x, r2x = w[0], w[3]
            blocks.append((np.stack([r1x, r2x, r1x + w[1], w[2]], 1), jac))
    elif case == VERTEX:
        jac = xi ** 3 * e2
        blocks.append((np.stack([xi, xi * e1, xi * e2, xi * e2 * e3], 1), jac))
        blocks.append((np.stack([xi * e2, xi * e2 * e3, xi, xi * e1], 1), jac))
    else:
        raise ValueError(f"unknown singular case {case}")
    pts = np.concatenate([b[0] for b in blocks])
    wts = np.concatenate([w0 * b[1] for b in blocks])
    return np.ascontiguousarray(pts), wts


def exact_monomial_pair(a: int, b: int, c: int, d: int) -> float:
    """Integral of r1x^a r2x^b r1y^c r2y^d over T x T."""
    return 1.0 / ((b + 1) * (a + b + 2)) / ((d + 1) * (c + d + 2))
