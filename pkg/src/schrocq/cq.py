"""Runge-Kutta convolution quadrature.

The calculus acts on the m x m matrix symbol ``delta(z)/k`` of an RK method:
a symbol ``F`` analytic in the right half-plane yields weights W^j defined by
the power series ``F(delta(z)/k) = sum_j W^j z^j``.  Weights are computed by
the trapezoidal rule on a circle of radius ``lam`` (an FFT of length Q+1).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .linalg import (EigenDecomposition, SingularMatrixError, as_complex_matrix,
                     eig_small, fft_inverse_scaled)
from .tableaus import ButcherTableau

EPS = 2.0 ** -52
CONTOUR_NODES = 64


class DomainError(ValueError):
    pass


def contour_radius(k: float, Q: int) -> float:
    """max(eps^(1/(2(Q+1))), k^(3/(Q+1))), kept inside the unit disc."""
    lam = max(EPS ** (1.0 / (2 * (Q + 1))), k ** (3.0 / (Q + 1)))
    if lam >= 1.0:
        # k >= 1 would put the contour on the pole of delta(z) at z = 1
        lam = EPS ** (1.0 / (2 * (Q + 1)))
    return lam


def delta_of_z(t: ButcherTableau, z) -> np.ndarray:
    """delta(z) = (A + z/(1-z) 1 b^T)^{-1}."""
    z = complex(z)
    if z == 1:
        raise SingularMatrixError("delta(z) is undefined at z = 1")
    M = t.A + (z / (1 - z)) * np.outer(np.ones(t.m), t.b)
    if np.linalg.cond(M) > 1e14:
        raise SingularMatrixError(f"A + z/(1-z) 1 b^T is singular at z={z}")
    return np.linalg.inv(M)


def delta_sherman_morrison(t: ButcherTableau, z) -> np.ndarray:
    """A^{-1} - z A^{-1} 1 b^T A^{-1} / (1 - z R(inf))."""
    z = complex(z)
    denom = 1 - z * t.r_infinity
    if denom == 0:
        raise SingularMatrixError(f"delta(z) has a pole at z={z}")
    Ai1 = t.Ainv @ np.ones(t.m)
    return t.Ainv - z * np.outer(Ai1, t.bAinv) / denom


def helmholtz_root(mu, k: float, V0: float):
    """Principal sqrt(-i mu / k + V0), the exterior wave number for an
    eigenvalue ``mu`` of delta(z)."""
    return np.sqrt(-1j * np.asarray(mu) / k + V0)


@dataclass(frozen=True)
class ScalarSymbol:
    func: Callable
    label: str = ""

    def __call__(self, s):
        return self.func(s)


def _as_symbol(F) -> ScalarSymbol:
    return F if isinstance(F, ScalarSymbol) else ScalarSymbol(F, getattr(F, "__name__", ""))


def compose_with_root(F, V0: float) -> ScalarSymbol:
    """s -> F(sqrt(-i s + V0)): the shorthand used for exterior operators."""
    F = _as_symbol(F)
    return ScalarSymbol(lambda s: F(np.sqrt(-1j * s + V0)), f"{F.label}(sqrt(-i s + V0))")


@dataclass
class CqContext:
    tableau: ButcherTableau
    k: float
    N: int
    Q: int
    lam: float
    V0: float = 0.0
    deltas: list = field(default_factory=list, repr=False)
    eigs: list = field(default_factory=list, repr=False)

    @classmethod
    def create(cls, tableau: ButcherTableau, k: float, N: int, Q: int | None = None,
               V0: float = 0.0, lam: float | None = None) -> "CqContext":
        if k <= 0:
            raise ValueError("time step must be positive")
        if N < 0:
            raise ValueError("step count must be non-negative")
        Q = N if Q is None else int(Q)
        if Q < N:
            raise ValueError(f"need Q >= N (got Q={Q}, N={N})")
        lam = contour_radius(k, Q) if lam is None else float(lam)
        if not 0 < lam < 1:
            raise ValueError("contour radius must lie in (0, 1)")
        ctx = cls(tableau, float(k), int(N), Q, lam, float(V0))
        for z in ctx.nodes:
            D = delta_of_z(tableau, z) / k
            ctx.deltas.append(D)
            ctx.eigs.append(eig_small(D) if tableau.m <= 3 else _eig_general(D))
        return ctx

    @property
    def nodes(self) -> np.ndarray:
        """Contour nodes lam * zeta^{-l}, l = 0..Q."""
        L = self.Q + 1
        return self.lam * np.exp(-2j * np.pi * np.arange(L) / L)

    def b_eig(self, z) -> tuple[EigenDecomposition, np.ndarray]:
        """Eigendecomposition of delta(z)/k and the wave numbers of B(z)."""
        e = eig_small(delta_of_z(self.tableau, z) / self.k)
        return e, helmholtz_root(e.eigenvalues, 1.0, self.V0)

    def node_wavenumbers(self):
        """For every contour node: (eigendecomposition of delta/k, B eigenvalues)."""
        return [(e, helmholtz_root(e.eigenvalues, 1.0, self.V0)) for e in self.eigs]


def _eig_general(M) -> EigenDecomposition:
    lam, P = np.linalg.eig(M)
    cond = np.linalg.cond(P)
    return EigenDecomposition(lam, P, np.linalg.inv(P), float(cond))


def b_of_z(ctx: CqContext, z) -> np.ndarray:
    """B(z) = sqrt(-(i delta(z)/k - V0)) on the principal branch."""
    e = eig_small(delta_of_z(ctx.tableau, z) / ctx.k)
    arg = -1j * delta_of_z(ctx.tableau, z) / ctx.k + ctx.V0 * np.eye(ctx.tableau.m)
    if e.defective:
        return matrix_function(np.sqrt, arg, halfplane=False, center_hint=np.sqrt(np.abs(ctx.V0) + 1))
    return e.apply(helmholtz_root(e.eigenvalues, 1.0, ctx.V0))


def _assemble_blocks(P, Pinv, values) -> np.ndarray:
    """(P (x) I) blockdiag(values) (P^{-1} (x) I) for operator-valued values."""
    m = P.shape[0]
    vals = [np.atleast_2d(np.asarray(v, dtype=np.complex128)) for v in values]
    d1, d2 = vals[0].shape
    out = np.zeros((m, m, d1, d2), dtype=np.complex128)
    for l, v in enumerate(vals):
        out += np.einsum("i,j,pq->ijpq", P[:, l], Pinv[l, :], v)
    return out.transpose(0, 2, 1, 3).reshape(m * d1, m * d2)


def _contour_function(F, M, nodes, halfplane, center_hint=None):
    ev = np.linalg.eigvals(M)
    center = ev.mean()
    spread = np.max(np.abs(ev - center))
    if halfplane:
        if np.min(ev.real) <= 0:
            raise DomainError("spectrum is not inside the right half-plane")
        reach = center.real
        if spread >= reach:
            center = complex(np.max(ev.real), center.imag)
            spread = np.max(np.abs(ev - center))
            reach = center.real
            if spread >= reach:
                raise DomainError("no circle inside the half-plane encloses the spectrum")
        radius = np.sqrt(max(spread, 1e-3 * reach) * reach)
    else:
        radius = max(2 * spread, abs(center) * 0.5, 1.0 if center_hint is None else center_hint)
    m = M.shape[0]
    theta = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
    acc = None
    for th in theta:
        lam = center + radius * np.exp(1j * th)
        # (1/2 pi i) d lam = radius e^{i th} d th / (2 pi)
        res = np.linalg.inv(lam * np.eye(m) - M) * (radius * np.exp(1j * th) / nodes)
        val = np.asarray(F(lam), dtype=np.complex128)
        term = np.kron(res, np.atleast_2d(val)) if val.ndim else res * val
        acc = term if acc is None else acc + term
    return acc


def matrix_function(F, M, eig: EigenDecomposition | None = None, *, halfplane: bool = True,
                    force_contour: bool = False, nodes: int = CONTOUR_NODES,
                    center_hint=None) -> np.ndarray:
    """F(M) for a holomorphic scalar- or operator-valued F.

    Diagonalizes M when its eigenvector matrix is well conditioned, otherwise
    integrates the resolvent on a circle around the spectrum.  Operator values
    of shape (d1, d2) give an (m*d1, m*d2) block matrix with stage-major layout.
    """
    M = as_complex_matrix(M)
    m = M.shape[0]
    if eig is None and not force_contour:
        eig = eig_small(M) if m <= 3 else _eig_general(M)
    if not force_contour and not eig.defective:
        if halfplane and np.min(eig.eigenvalues.real) <= 0:
            raise DomainError("spectrum is not inside the right half-plane")
        values = [F(lam) for lam in eig.eigenvalues]
        if np.ndim(values[0]) == 0:
            return eig.apply(np.array(values, dtype=np.complex128))
        return _assemble_blocks(eig.P, eig.Pinv, values)
    return _contour_function(F, M, nodes, halfplane, center_hint)


@dataclass(frozen=True)
class WeightSequence:
    """W^0..W^N, each an m x m matrix."""

    weights: np.ndarray
    label: str = ""

    def __len__(self):
        return self.weights.shape[0]

    def __getitem__(self, j):
        return self.weights[j]


def symbol_at_nodes(ctx: CqContext, F, mode: str = "compose") -> np.ndarray:
    """F applied to delta(z_l)/k (direct) or to B(z_l) (compose) at every node."""
    F = _as_symbol(F)
    G = compose_with_root(F, ctx.V0) if mode == "compose" else F
    if mode not in ("compose", "direct"):
        raise ValueError(f"mode must be 'compose' or 'direct', got {mode!r}")
    out = np.empty((ctx.Q + 1, ctx.tableau.m, ctx.tableau.m), dtype=np.complex128)
    for l, (D, e) in enumerate(zip(ctx.deltas, ctx.eigs)):
        out[l] = matrix_function(G, D, e)
    return out


def cq_weights(ctx: CqContext, F, mode: str = "compose") -> WeightSequence:
    """Convolution weights W^0..W^N of the symbol F.

    ``mode='compose'`` (default) uses F(sqrt(-i s + V0)); ``mode='direct'``
    uses F(s) itself.
    """
    samples = symbol_at_nodes(ctx, F, mode)
    coeffs = fft_inverse_scaled(samples, ctx.lam)
    return WeightSequence(coeffs[: ctx.N + 1], _as_symbol(F).label)


def cq_apply(weights, g, n: int) -> np.ndarray:
    """(F(d_t^k) g)_n = sum_{j=0}^n W^{n-j} g_j.

    ``g[j]`` has leading stage axis of length m; trailing axes are carried along.
    """
    W = weights.weights if isinstance(weights, WeightSequence) else np.asarray(weights)
    if n >= len(W) or n >= len(g):
        raise ValueError(f"need weights and history through index {n} "
                         f"(have {len(W)} weights, {len(g)} history entries)")
    acc = None
    for j in range(n + 1):
        term = np.tensordot(W[n - j], np.asarray(g[j]), axes=(1, 0))
        acc = term if acc is None else acc + term
    return acc


def cq_apply_all(weights, g) -> np.ndarray:
    """All outputs n = 0..len(g)-1 of the discrete convolution."""
    return np.array([cq_apply(weights, g, n) for n in range(len(g))])


def _solve(Mat, rhs):
    if scipy.sparse.issparse(Mat):
        return scipy.sparse.linalg.spsolve(Mat.tocsc(), rhs)
    return np.linalg.solve(Mat, rhs)


def decouple_stages(t: ButcherTableau, k: float, op, rhs, mass=None) -> np.ndarray:
    """Solve (-i A^{-1} (x) mass + k I (x) op) U = rhs for U of shape (m, n).

    The stage coupling is removed with the eigenvectors of A^{-1}, leaving m
    independent shifted problems ``(-i mu_j mass + k op) x = y``.
    """
    rhs = np.asarray(rhs, dtype=np.complex128)
    m, n = rhs.shape
    if m != t.m:
        raise ValueError(f"rhs has {m} stage rows, tableau has {t.m} stages")
    if mass is None:
        mass = scipy.sparse.identity(n, format="csc") if scipy.sparse.issparse(op) else np.eye(n)
    e = eig_small(t.Ainv) if t.m <= 3 else _eig_general(t.Ainv)
    if e.defective:
        dense_op = op.toarray() if scipy.sparse.issparse(op) else np.asarray(op)
        dense_mass = mass.toarray() if scipy.sparse.issparse(mass) else np.asarray(mass)
        big = np.kron(-1j * t.Ainv, dense_mass) + k * np.kron(np.eye(m), dense_op)
        return scipy.linalg.solve(big, rhs.reshape(-1)).reshape(m, n)
    rt = e.Pinv @ rhs
    out = np.empty_like(rt)
    for j, mu in enumerate(e.eigenvalues):
        out[j] = _solve(-1j * mu * mass + k * op, rt[j])
    return e.P @ out
