"""Self-checks behind the CLI gates: weight oracle and Calderon residual."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..bem3d import SurfaceMesh, TraceSpaces, assemble_many, calderon_residual, cube_surface
from ..cq import CqContext, ScalarSymbol, cq_weights
from ..linalg import eig_small
from ..tableaus import ButcherTableau, builtin_tableau


def exact_weights(t: ButcherTableau, k: float, N: int, symbol: str) -> np.ndarray:
    """Taylor coefficients of F(delta(z)/k) for F = s, s^2, 1/s in closed form.

    delta(z) = A^{-1} - z/(1 - R(inf) z) A^{-1} 1 b^T A^{-1} and
    delta(z)^{-1} = A + z/(1 - z) 1 b^T.
    """
    m = t.m
    one = np.ones(m)
    C = np.outer(t.Ainv @ one, t.bAinv)
    R = t.r_infinity
    s = [t.Ainv / k] + [-(R ** (j - 1)) * C / k for j in range(1, N + 1)]
    if symbol == "s":
        return np.array(s, dtype=complex)
    if symbol == "s2":
        return np.array([sum(s[i] @ s[n - i] for i in range(n + 1)) for n in range(N + 1)], dtype=complex)
    if symbol == "1/s":
        return np.array([k * t.A] + [k * np.outer(one, t.b)] * N, dtype=complex)
    raise ValueError(f"unknown symbol {symbol!r}")


SYMBOLS = {
    "s": ScalarSymbol(lambda s: s, "s"),
    "s2": ScalarSymbol(lambda s: s * s, "s^2"),
    "1/s": ScalarSymbol(lambda s: 1.0 / s, "1/s"),
}


@dataclass
class WeightCheck:
    tableau: str
    symbol: str
    deviation: float
    runtime: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tol


def weights_selftest(k: float = 0.05, N: int = 64, Q: int | None = None,
                     tableaus=("radau_iia_1", "gauss1"), tol: float = 1e-8) -> list[WeightCheck]:
    """Max abs deviation of the contour weights (direct mode) from the exact series."""
    out = []
    for name in tableaus:
        t = builtin_tableau(name)
        for key, F in SYMBOLS.items():
            t0 = time.perf_counter()
            ctx = CqContext.create(t, k, N, Q=Q)
            W = cq_weights(ctx, F, mode="direct").weights
            dt = time.perf_counter() - t0
            dev = float(np.abs(W - exact_weights(t, k, N, key)).max())
            out.append(WeightCheck(name, key, dev, dt, tol))
    return out


@dataclass
class CalderonLevel:
    n_triangles: int
    h: float
    s: complex
    row1: float
    row2: float


@dataclass
class CalderonReport:
    levels: list
    frequencies: np.ndarray

    def rates(self, row: str) -> dict:
        """Successive log2 ratios per frequency."""
        out = {}
        for s in self.frequencies:
            vals = [getattr(l, row) for l in self.levels if l.s == s]
            hs = [l.h for l in self.levels if l.s == s]
            out[complex(s)] = [float(np.log(a / b) / np.log(ha / hb))
                               for a, b, ha, hb in zip(vals, vals[1:], hs, hs[1:])]
        return out

    def passed(self, min_rate: float = 1.0) -> bool:
        return all(r >= min_rate for row in ("row1", "row2")
                   for rs in self.rates(row).values() for r in rs)


def point_source_traces(spaces: TraceSpaces, s: complex, y0):
    """Exterior traces of x -> exp(-s|x - y0|)/(4 pi |x - y0|): P1 interpolant and
    panel means of the normal derivative."""
    y0 = np.asarray(y0, float)

    def u(x):
        r = np.linalg.norm(x - y0)
        return np.exp(-s * r) / (4 * np.pi * r)

    def dn(x, nrm):
        d = x - y0
        r = np.linalg.norm(d)
        return -np.exp(-s * r) * (1 + s * r) / (4 * np.pi * r ** 3) * (d @ nrm)

    return spaces.interpolate_p1(u), spaces.project_p0(dn)


def calderon_selftest(k: float = 0.1, tableau: str = "radau_iia_2", levels: int = 3,
                      mesh: SurfaceMesh | None = None, source=None, order: int = 4) -> CalderonReport:
    """Residuals of both Calderon rows for an interior point source on a
    sequence of uniformly refined surfaces, at the wave numbers of B(0)."""
    t = builtin_tableau(tableau)
    e = eig_small(t.Ainv)
    svals = np.sqrt(-1j * e.eigenvalues / k)
    if mesh is None:
        mesh = cube_surface(2, side=2.0)
        source = (0.1, -0.2, 0.15) if source is None else source
    if source is None:
        source = mesh.vertices.mean(axis=0)
    out = []
    for lvl in range(levels):
        if lvl:
            mesh = mesh.refine()
        sp = TraceSpaces(mesh)
        ops = assemble_many(mesh, svals, order)
        for s, o in zip(svals, ops):
            g, lam = point_source_traces(sp, s, source)
            r = calderon_residual(mesh, sp, s, g, lam, o)
            out.append(CalderonLevel(mesh.n_triangles, mesh.h, complex(s), r.row1, r.row2))
    return CalderonReport(out, svals)
