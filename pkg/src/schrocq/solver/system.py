"""The per-step coupled stage system and time marching.

Unknowns per step are the m stage vectors U (interior P1 coefficients) and,
for boundary element closures, m Neumann densities.  The j = 0 convolution
weights sit in the system matrix; the system is block-diagonalized by the
eigenvectors of A^{-1} (these also diagonalize B(0)), so m independent
systems are factored once and reused for every step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from ..cq import CqContext
from ..fem import InteriorForms
from ..linalg import SingularMatrixError, eig_small


class StepSolveError(RuntimeError):
    pass


class BoundaryModel(Protocol):
    """Exterior closure acting on Dirichlet traces and (optionally) densities."""

    n_trace: int
    n_density: int

    def j0_blocks(self, index: int, beta: complex):
        """(W_tt, C_td, C_dt, V_dd) at the scalar frequency beta of B(0)."""

    def history(self, hist: "TimeHistory", n: int):
        """History sums for j >= 1 as stage-major arrays (h_trace, h_density)."""


@dataclass
class TimeHistory:
    u: list = field(default_factory=list)
    U: list = field(default_factory=list)
    traces: list = field(default_factory=list)
    densities: list = field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.U)

    def check(self, n: int) -> None:
        if len(self.u) != n + 1 or len(self.U) != n:
            raise StepSolveError(f"history is not complete through step {n}: "
                                 f"{len(self.u)} step values, {len(self.U)} stage vectors")


class _Factor:
    """Schur factorization of one decoupled stage system."""

    def __init__(self, A, inner, trace_idx, k, blocks, dirichlet):
        self.inner = inner
        self.trace_idx = trace_idx
        self.dirichlet = dirichlet
        A = A.tocsc()
        self.A_II = A[inner][:, inner].tocsc()
        self.lu_II = scipy.sparse.linalg.splu(self.A_II) if inner.size else None
        if dirichlet:
            return
        self.A_IT = A[inner][:, trace_idx].tocsc()
        self.A_TI = A[trace_idx][:, inner].tocsr()
        A_TT = A[trace_idx][:, trace_idx].toarray()
        W, Ctd, Cdt, Vdd = blocks
        S_TT = A_TT + k * W
        if inner.size:
            S_TT = S_TT - self.A_TI @ self.lu_II.solve(self.A_IT.toarray())
        nd = Vdd.shape[0]
        if nd:
            S = np.block([[S_TT, k * Ctd], [Cdt, Vdd]])
        else:
            S = S_TT
        self.n_t = trace_idx.size
        self.lu = scipy.linalg.lu_factor(S, check_finite=False)
        if not np.all(np.isfinite(self.lu[0])) or np.min(np.abs(np.diag(self.lu[0]))) == 0:
            raise SingularMatrixError("coupled stage system is singular")

    def solve(self, b_u, b_d):
        x = np.zeros_like(b_u)
        if self.dirichlet:
            if self.inner.size:
                x[self.inner] = self.lu_II.solve(b_u[self.inner])
            return x, b_d[:0]
        b_I = b_u[self.inner]
        b_T = b_u[self.trace_idx]
        if self.inner.size:
            b_T = b_T - self.A_TI @ self.lu_II.solve(b_I)
        sol = scipy.linalg.lu_solve(self.lu, np.concatenate([b_T, b_d]), check_finite=False)
        x_T = sol[: self.n_t]
        x[self.trace_idx] = x_T
        if self.inner.size:
            x[self.inner] = self.lu_II.solve(b_I - self.A_IT @ x_T)
        return x, sol[self.n_t:]


class CoupledStepSystem:
    """Factored j = 0 system of one run.

    ``boundary=None`` together with ``dirichlet=True`` removes the trace DOFs
    (homogeneous Dirichlet problem); this is the boundary-free reference mode.
    """

    def __init__(self, ctx: CqContext, forms: InteriorForms, boundary: BoundaryModel | None,
                 dirichlet: bool = False):
        if boundary is None and not dirichlet:
            raise ValueError("need a boundary model unless the Dirichlet mode is requested")
        self.ctx = ctx
        self.forms = forms
        self.boundary = None if dirichlet else boundary
        self.dirichlet = dirichlet
        t = ctx.tableau
        self.eig = eig_small(t.Ainv)
        if self.eig.defective:
            raise SingularMatrixError("A^{-1} is not diagonalizable")
        self.betas = np.sqrt(-1j * self.eig.eigenvalues / ctx.k + ctx.V0)
        n = forms.M.shape[0]
        trace_idx = forms.mesh.boundary_vertices
        mask = np.ones(n, bool)
        mask[trace_idx] = False
        self.inner = np.flatnonzero(mask)
        self.trace_idx = np.asarray(trace_idx)
        self.n_density = 0 if self.boundary is None else self.boundary.n_density
        H = forms.H
        self.factors = []
        for i, mu in enumerate(self.eig.eigenvalues):
            A = -1j * mu * forms.M + ctx.k * H
            blocks = None if self.boundary is None else self.boundary.j0_blocks(i, self.betas[i])
            self.factors.append(_Factor(A, self.inner, self.trace_idx, ctx.k, blocks, dirichlet))
            blocks = None
        if hasattr(self.boundary, "release_j0"):
            self.boundary.release_j0()

    def solve(self, rhs_u, rhs_d):
        """Solve the stage-major system for (U, densities)."""
        P, Pinv = self.eig.P, self.eig.Pinv
        tu = Pinv @ rhs_u
        td = Pinv @ rhs_d
        xu = np.empty_like(tu)
        xd = np.empty((tu.shape[0], self.n_density), dtype=np.complex128)
        for i, f in enumerate(self.factors):
            xu[i], xd[i] = f.solve(tu[i], td[i])
        return P @ xu, P @ xd

    def matvec(self, U, dens):
        """Apply the full j = 0 operator (used for residual checks)."""
        t, k = self.ctx.tableau, self.ctx.k
        f = self.forms
        out_u = -1j * (t.Ainv @ (f.M @ U.T).T) + k * (f.H @ U.T).T
        if self.dirichlet:
            out_u[:, self.trace_idx] = 0.0
            return out_u, dens[:, :0]
        P, Pinv = self.eig.P, self.eig.Pinv
        g = U[:, self.trace_idx]
        tg, td = Pinv @ g, Pinv @ dens
        ru = np.empty_like(tg)
        rd = np.empty_like(td)
        for i in range(t.m):
            W, Ctd, Cdt, Vdd = self.boundary.j0_blocks(i, self.betas[i])
            ru[i] = W @ tg[i] + Ctd @ td[i]
            rd[i] = Cdt @ tg[i] + Vdd @ td[i]
        out_u[:, self.trace_idx] += k * (P @ ru)
        return out_u, P @ rd


def start_history(u0) -> TimeHistory:
    return TimeHistory(u=[np.asarray(u0, dtype=np.complex128).copy()])


def advance_step(system: CoupledStepSystem, hist: TimeHistory, n: int) -> TimeHistory:
    """Compute the stages of step n and u^{n+1}; history must hold steps < n."""
    hist.check(n)
    t, k = system.ctx.tableau, system.ctx.k
    f = system.forms
    un = hist.u[n]
    rhs_u = t.d[:, None] * (f.M @ un)[None, :]
    rhs_d = np.zeros((t.m, system.n_density), dtype=np.complex128)
    if system.boundary is not None and n > 0:
        h_t, h_d = system.boundary.history(hist, n)
        rhs_u[:, system.trace_idx] -= k * h_t
        rhs_d -= h_d
    try:
        U, dens = system.solve(rhs_u, rhs_d)
    except (RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        raise StepSolveError(f"stage solve failed at step {n}: {exc}") from exc
    if not (np.all(np.isfinite(U)) and np.all(np.isfinite(dens))):
        raise StepSolveError(f"non-finite stage values at step {n}")
    hist.U.append(U)
    hist.traces.append(U[:, system.trace_idx])
    hist.densities.append(dens)
    hist.u.append(t.r_infinity * un + t.bAinv @ U)
    return hist


def march(system: CoupledStepSystem, u0, N: int, callback=None) -> TimeHistory:
    hist = start_history(u0)
    for n in range(N):
        advance_step(system, hist, n)
        if callback is not None:
            callback(hist, n + 1)
    return hist
