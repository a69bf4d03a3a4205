"""Boundary element closure of the coupled scheme and exterior recovery.

Convolution weights of the boundary operators are never formed for j >= 1
in the default mode.  With c_{l,j} = lam^{-j} zeta^{lj} / (Q+1),

    sum_{j=1}^n W^j x^{n-j} = sum_l Op(B(z_l)) y_l,   y_l = sum_{j=1}^n c_{l,j} x^{n-j},

and Op(B(z_l)) = (P_l (x) I) diag(Op(beta_{l,i})) (P_l^{-1} (x) I) needs only
the m scalar-frequency assemblies at each contour node.  These are cached
while they fit a memory budget and reassembled on demand otherwise.
Explicit weights (precompute_operator_weights) remain available for small
meshes.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..bem3d import SurfaceMesh, TraceSpaces, assemble_many, evaluate_potentials
from ..cq import CqContext
from ..linalg import eig_small, fft_inverse_scaled
from .system import TimeHistory

log = logging.getLogger(__name__)

DEFAULT_CACHE_BYTES = 3 * 1024 ** 3 // 2


def _set_bytes(mesh: SurfaceMesh) -> int:
    nt, nv = mesh.n_triangles, mesh.n_vertices
    return 16 * (nt * nt + nt * nv + nv * nv)


def node_coefficients(ctx: CqContext, n: int) -> np.ndarray:
    """c[l, j] = lam^{-j} zeta^{l j} / (Q+1) for j = 0..n."""
    L = ctx.Q + 1
    j = np.arange(n + 1)
    l = np.arange(L)[:, None]
    return np.exp(2j * np.pi * l * j / L) * ctx.lam ** (-j.astype(float)) / L


def b0_decomposition(ctx: CqContext):
    """Eigenvectors of A^{-1} and the wave numbers sqrt(-i mu / k + V0) of B(0)."""
    e = eig_small(ctx.tableau.Ainv)
    return e, np.sqrt(-1j * e.eigenvalues / ctx.k + ctx.V0)


class BemBoundary:
    """Galerkin FEM-BEM closure on the boundary surface of a box mesh."""

    def __init__(self, ctx: CqContext, surface: SurfaceMesh, order: int = 4,
                 cache_bytes: int = DEFAULT_CACHE_BYTES, assembler=None):
        self.ctx = ctx
        self.surface = surface
        self.spaces = TraceSpaces(surface)
        self.n_trace = surface.n_vertices
        self.n_density = surface.n_triangles
        self.order = order
        self._assemble = assembler or (lambda svals: assemble_many(surface, svals, order))
        self._b0_eig, self._b0_betas = b0_decomposition(ctx)
        self._b0_ops = None
        self.node_betas = [np.sqrt(-1j * e.eigenvalues + ctx.V0) for e in ctx.eigs]
        per_node = ctx.tableau.m * _set_bytes(surface)
        self._cache_nodes = int(min(ctx.Q + 1, cache_bytes // max(per_node, 1)))
        self._cache = {}
        self.assemblies = 0

    def b0_operators(self):
        if self._b0_ops is None:
            self._b0_ops = self._assemble(self._b0_betas)
            self.assemblies += 1
        return self._b0_ops

    def release_j0(self) -> None:
        """Drop the B(0) assemblies once the step system is factored."""
        self._b0_ops = None

    def j0_blocks(self, index: int, beta: complex):
        if not np.isclose(beta, self._b0_betas[index], rtol=1e-12, atol=0):
            raise ValueError("stage eigen-ordering differs from the boundary model")
        ops = self.b0_operators()[index]
        M = self.spaces.mixed_mass.toarray()
        return ops.W, -0.5 * M + ops.Kt, 0.5 * M.T - ops.K, ops.V

    def node_operators(self, l: int):
        ops = self._cache.get(l)
        if ops is None:
            ops = self._assemble(self.node_betas[l])
            self.assemblies += 1
            if l < self._cache_nodes:
                self._cache[l] = ops
        return ops

    def _apply_node(self, l, yg, yd):
        """Op(B(z_l)) applied to stage-major traces yg and densities yd."""
        e = self.ctx.eigs[l]
        tg, td = e.Pinv @ yg, e.Pinv @ yd
        ht = np.empty_like(tg)
        hd = np.empty_like(td)
        for i, ops in enumerate(self.node_operators(l)):
            ht[i] = ops.W @ tg[i] + ops.Kt @ td[i]
            hd[i] = ops.V @ td[i] - ops.K @ tg[i]
        return e.P @ ht, e.P @ hd

    def history(self, hist: TimeHistory, n: int):
        c = node_coefficients(self.ctx, n)[:, 1:]           # (L, n), column j-1
        G = np.stack(hist.traces[:n][::-1])                  # index j-1 holds step n-j
        D = np.stack(hist.densities[:n][::-1])
        yg_all = np.tensordot(c, G, axes=(1, 0))
        yd_all = np.tensordot(c, D, axes=(1, 0))
        h_t = np.zeros_like(G[0])
        h_d = np.zeros_like(D[0])
        for l in range(self.ctx.Q + 1):
            a, b = self._apply_node(l, yg_all[l], yd_all[l])
            h_t += a
            h_d += b
        return h_t, h_d


@dataclass(frozen=True)
class OperatorWeights:
    """Explicit block weights W^j, stage-major, j = 0..N."""

    V: np.ndarray
    K: np.ndarray
    Kt: np.ndarray
    W: np.ndarray

    @property
    def N(self) -> int:
        return self.V.shape[0] - 1


def _block(P, Pinv, mats):
    m = P.shape[0]
    r, c = mats[0].shape
    out = np.zeros((m, r, m, c), np.complex128)
    for i in range(m):
        out += np.einsum("a,b,pq->apbq", P[:, i], Pinv[i, :], mats[i])
    return out.reshape(m * r, m * c)


def precompute_operator_weights(ctx: CqContext, mesh: SurfaceMesh, spaces: TraceSpaces | None = None,
                                assembler=None, order: int = 4) -> OperatorWeights:
    """W^j(V), W^j(K), W^j(K^T), W^j(W) for j = 0..N by the FFT of the
    block operators at B(z_l), l = 0..Q."""
    assemble = assembler or (lambda svals: assemble_many(mesh, svals, order))
    # K^T(B) is built from the transposed scalar blocks: the stage coupling
    # (P (x) I) ... (P^{-1} (x) I) is not symmetric, so it is not K(B)^T
    samples = {name: [] for name in ("V", "K", "Kt", "W")}
    for e in ctx.eigs:
        betas = np.sqrt(-1j * e.eigenvalues + ctx.V0)
        ops = assemble(betas)
        for name in samples:
            samples[name].append(_block(e.P, e.Pinv, [getattr(o, name) for o in ops]))
    out = {name: fft_inverse_scaled(np.stack(v), ctx.lam)[: ctx.N + 1] for name, v in samples.items()}
    return OperatorWeights(out["V"], out["K"], out["Kt"], out["W"])


class ExplicitWeightBoundary(BemBoundary):
    """BemBoundary whose history uses explicit block weights."""

    def __init__(self, ctx: CqContext, surface: SurfaceMesh, weights: OperatorWeights, **kw):
        super().__init__(ctx, surface, **kw)
        self.weights = weights

    def history(self, hist: TimeHistory, n: int):
        w = self.weights
        m = self.ctx.tableau.m
        h_t = np.zeros(m * self.n_trace, complex)
        h_d = np.zeros(m * self.n_density, complex)
        for j in range(1, n + 1):
            g = hist.traces[n - j].ravel()
            d = hist.densities[n - j].ravel()
            h_t += w.W[j] @ g + w.Kt[j] @ d
            h_d += w.V[j] @ d - w.K[j] @ g
        return h_t.reshape(m, -1), h_d.reshape(m, -1)


@dataclass
class ExteriorField:
    stages: np.ndarray    # (N, m, npoints)
    values: np.ndarray    # (N + 1, npoints)


def recover_exterior(hist: TimeHistory, ctx: CqContext, mesh: SurfaceMesh, points,
                     n: int | None = None, npts: int = 6) -> ExteriorField:
    """U*^n = -S(d_t) lam^n + D(d_t) gamma U^n at the points, with the
    step values u*^{n+1} = R(inf) u*^n + b^T A^{-1} U*^n (u*^0 = 0)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = hist.steps if n is None else n
    t = ctx.tableau
    m = t.m
    e0, b0 = b0_decomposition(ctx)
    node_betas = [np.sqrt(-1j * e.eigenvalues + ctx.V0) for e in ctx.eigs]
    stages = np.zeros((n, m, points.shape[0]), complex)
    values = np.zeros((n + 1, points.shape[0]), complex)
    for step in range(n):
        g, d = hist.traces[step], hist.densities[step]
        val = e0.P @ evaluate_potentials(mesh, e0.Pinv @ g, e0.Pinv @ d, b0, points, npts)
        if step > 0:
            c = node_coefficients(ctx, step)[:, 1:]
            G = np.stack(hist.traces[:step][::-1])
            D = np.stack(hist.densities[:step][::-1])
            for l, e in enumerate(ctx.eigs):
                yg = np.tensordot(c[l], G, axes=(0, 0))
                yd = np.tensordot(c[l], D, axes=(0, 0))
                val = val + e.P @ evaluate_potentials(mesh, e.Pinv @ yg, e.Pinv @ yd,
                                                      node_betas[l], points, npts)
        stages[step] = val
        values[step + 1] = t.r_infinity * values[step] + t.bAinv @ val
    return ExteriorField(stages, values)
