"""Butcher tableaus of A-stable collocation methods with invertible A.

Gauss and Radau IIA members are built from their collocation nodes and
checked against the order conditions when loaded.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np


class TableauError(ValueError):
    pass


class StabilityPoleError(ZeroDivisionError):
    pass


@dataclass(frozen=True, eq=False)
class ButcherTableau:
    name: str
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int
    stage_order: int
    exact: tuple | None = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.b.size

    @cached_property
    def Ainv(self) -> np.ndarray:
        return np.linalg.inv(self.A)

    @cached_property
    def r_infinity(self) -> float:
        return float(1.0 - self.b @ self.Ainv @ np.ones(self.m))

    @cached_property
    def d(self) -> np.ndarray:
        """-i A^{-1} 1, the right-hand side weights of a stage solve."""
        return -1j * (self.Ainv @ np.ones(self.m))

    @cached_property
    def bAinv(self) -> np.ndarray:
        """b^T A^{-1}, so that u_{n+1} = R(inf) u_n + bAinv @ U_n."""
        return self.b @ self.Ainv

    @property
    def stiffly_accurate(self) -> bool:
        return bool(np.allclose(self.A[-1], self.b, rtol=0, atol=1e-14))


def _collocation(nodes):
    """A and b of the collocation method with the given nodes.

    Works on Fractions when the nodes are rational, floats otherwise.
    """
    s = len(nodes)
    A = [[None] * s for _ in range(s)]
    b = [None] * s
    for j in range(s):
        # Lagrange basis polynomial l_j as ascending coefficients
        poly = [1]
        denom = 1
        for k in range(s):
            if k == j:
                continue
            poly = [(poly[i - 1] if i > 0 else 0) - nodes[k] * (poly[i] if i < len(poly) else 0)
                    for i in range(len(poly) + 1)]
            denom = denom * (nodes[j] - nodes[k])
        integ = [0] + [p / (i + 1) for i, p in enumerate(poly)]

        def prim(x, integ=integ):
            return sum(ci * x ** i for i, ci in enumerate(integ))

        for i in range(s):
            A[i][j] = prim(nodes[i]) / denom
        b[j] = prim(1) / denom
    return A, b


_NODES = {
    "gauss1": ([Fraction(1, 2)], 2, 1),
    "gauss2": ([0.5 - np.sqrt(3.0) / 6, 0.5 + np.sqrt(3.0) / 6], 4, 2),
    "radau_iia_1": ([Fraction(1)], 1, 1),
    "radau_iia_2": ([Fraction(1, 3), Fraction(1)], 3, 2),
    "radau_iia_3": ([(4 - np.sqrt(6.0)) / 10, (4 + np.sqrt(6.0)) / 10, 1.0], 5, 3),
}

TABLEAU_NAMES = tuple(_NODES)


def check_order_conditions(t: ButcherTableau, tol: float = 1e-12) -> None:
    """Raise TableauError unless b^T c^{j-1} = 1/j for j <= order and the
    simplifying conditions A c^{j-1} = c^j / j hold for j <= stage order."""
    for j in range(1, t.order + 1):
        if abs(t.b @ t.c ** (j - 1) - 1.0 / j) > tol:
            raise TableauError(f"{t.name}: quadrature condition B({j}) fails")
    for j in range(1, t.stage_order + 1):
        if np.max(np.abs(t.A @ t.c ** (j - 1) - t.c ** j / j)) > tol:
            raise TableauError(f"{t.name}: stage condition C({j}) fails")
    if np.max(np.abs(t.A.sum(axis=1) - t.c)) > 1e-13:
        raise TableauError(f"{t.name}: row sums of A differ from c")
    if abs(np.linalg.det(t.A)) <= 1e-14:
        raise TableauError(f"{t.name}: A is singular")


@lru_cache(maxsize=None)
def builtin_tableau(name: str) -> ButcherTableau:
    """Return one of ``gauss1, gauss2, radau_iia_1, radau_iia_2, radau_iia_3``."""
    try:
        nodes, order, stage_order = _NODES[name]
    except KeyError:
        raise TableauError(
            f"unknown tableau {name!r}; choose from {', '.join(TABLEAU_NAMES)}") from None
    A, b = _collocation(nodes)
    exact = None
    if all(isinstance(x, Fraction) for x in nodes):
        exact = (tuple(tuple(row) for row in A), tuple(b), tuple(nodes))
    t = ButcherTableau(
        name=name,
        A=np.array([[float(x) for x in row] for row in A]),
        b=np.array([float(x) for x in b]),
        c=np.array([float(x) for x in nodes]),
        order=order,
        stage_order=stage_order,
        exact=exact,
    )
    check_order_conditions(t)
    return t


def stability_function(t: ButcherTableau, z) -> complex:
    """R(z) = 1 + z b^T (I - zA)^{-1} 1."""
    z = complex(z)
    M = np.eye(t.m) - z * t.A
    if np.linalg.cond(M) > 1e14:
        raise StabilityPoleError(f"R has a pole at z={z}")
    return complex(1.0 + z * (t.b @ np.linalg.solve(M, np.ones(t.m))))


def stability_function_alt(t: ButcherTableau, z) -> complex:
    """R(z) = R(inf) + b^T A^{-1} (I - zA)^{-1} 1."""
    z = complex(z)
    M = np.eye(t.m) - z * t.A
    if np.linalg.cond(M) > 1e14:
        raise StabilityPoleError(f"R has a pole at z={z}")
    return complex(t.r_infinity + t.bAinv @ np.linalg.solve(M, np.ones(t.m)))


def stability_function_many(t: ButcherTableau, z) -> np.ndarray:
    """Vectorised R(z) for an array of z (no pole checks)."""
    z = np.asarray(z, dtype=np.complex128)
    M = np.eye(t.m) - z[..., None, None] * t.A
    rhs = np.broadcast_to(np.ones(t.m, dtype=np.complex128), z.shape + (t.m,))
    sol = np.linalg.solve(M, rhs[..., None])[..., 0]
    return 1.0 + z * (sol @ t.b)


def r_infinity(t: ButcherTableau) -> float:
    return t.r_infinity
