"""Galerkin boundary operators of the kernel exp(-s r) / (4 pi r)."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from ..cq import DomainError, matrix_function
from ..linalg import as_complex_matrix, eig_small
from . import kernels
from .mesh import MeshError, SurfaceMesh
from .quadrature import COINCIDENT, EDGE, VERTEX, regular_pair_rule, singular_pair_rule, triangle_rule


class SingularityError(ValueError):
    pass


class NearFieldWarning(UserWarning):
    pass


def _check_frequency(s) -> complex:
    s = complex(s)
    if not s.real > 0:
        raise DomainError(f"frequency must have positive real part, got {s}")
    return s


def fundamental_solution_3d(x, y, s) -> complex:
    """exp(-s |x - y|) / (4 pi |x - y|)."""
    s = _check_frequency(s)
    r = float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))
    if r == 0.0:
        raise SingularityError("fundamental solution is singular at x = y")
    return complex(np.exp(-s * r) / (4 * np.pi * r))


@dataclass(frozen=True, eq=False)
class TraceSpaces:
    """Continuous P1 (Dirichlet traces) and piecewise constants (Neumann traces)."""

    mesh: SurfaceMesh

    @property
    def n_dirichlet(self) -> int:
        return self.mesh.n_vertices

    @property
    def n_neumann(self) -> int:
        return self.mesh.n_triangles

    @cached_property
    def mixed_mass(self) -> scipy.sparse.csr_matrix:
        """M[a, i] = integral of (P1 hat a) over triangle i, i.e. area_i / 3."""
        m = self.mesh
        rows = m.triangles.ravel()
        cols = np.repeat(np.arange(m.n_triangles), 3)
        vals = np.repeat(m.areas / 3.0, 3)
        return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(m.n_vertices, m.n_triangles))

    @cached_property
    def p0_mass(self) -> np.ndarray:
        return self.mesh.areas.copy()

    @cached_property
    def p1_mass(self) -> scipy.sparse.csr_matrix:
        m = self.mesh
        local = (np.ones((3, 3)) + np.eye(3)) / 12.0
        rows = np.repeat(m.triangles, 3, axis=1).ravel()
        cols = np.tile(m.triangles, (1, 3)).ravel()
        vals = (m.areas[:, None] * local.ravel()[None, :]).ravel()
        return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(m.n_vertices, m.n_vertices))

    def interpolate_p1(self, f) -> np.ndarray:
        return np.asarray([f(v) for v in self.mesh.vertices])

    def interpolate_p0(self, f) -> np.ndarray:
        """Values at panel centroids."""
        return np.asarray([f(c, n) for c, n in zip(self.mesh.centroids, self.mesh.normals)])

    def project_p0(self, f, npts: int = 6) -> np.ndarray:
        """L2 projection onto piecewise constants; f(x, n) is evaluated at rule points."""
        m = self.mesh
        ref, w = triangle_rule(npts)
        p = m.vertices[m.triangles]
        out = np.zeros(m.n_triangles, dtype=complex)
        for (r1, r2), wq in zip(ref, w):
            x = (1 - r1) * p[:, 0] + (r1 - r2) * p[:, 1] + r2 * p[:, 2]
            out += 2 * wq * np.array([f(xx, nn) for xx, nn in zip(x, m.normals)])
        return out


@dataclass(frozen=True, eq=False)
class BoundaryOperatorSet:
    """Dense V (P0 x P0), K (P0 x P1), W (P1 x P1) at one frequency; Kt = K^T."""

    s: complex
    V: np.ndarray
    K: np.ndarray
    W: np.ndarray

    @property
    def Kt(self) -> np.ndarray:
        return self.K.T


def _singular_tables(order: int):
    rules = [singular_pair_rule(VERTEX, order), singular_pair_rule(EDGE, order),
             singular_pair_rule(COINCIDENT, order)]
    pts = np.ascontiguousarray(np.concatenate([r[0] for r in rules]))
    w = np.concatenate([r[1] for r in rules])
    off = np.cumsum([0] + [len(r[1]) for r in rules]).astype(np.int64)
    return pts, w, off


def _panel_rule(mesh: SurfaceMesh, npts: int):
    """Physical rule points per panel, basis values and reference weights."""
    ref, w = triangle_rule(npts)
    basis = np.stack([1 - ref[:, 0], ref[:, 0] - ref[:, 1], ref[:, 1]], axis=1)
    pts = np.einsum("qa,tac->tqc", basis, mesh.vertices[mesh.triangles])
    return np.ascontiguousarray(pts), np.ascontiguousarray(basis), w


def surface_curls(mesh: SurfaceMesh) -> np.ndarray:
    """n x grad(hat function) per triangle and local vertex, shape (nt, 3, 3)."""
    p = mesh.vertices[mesh.triangles]
    n = mesh.normals
    out = np.empty_like(p)
    for a in range(3):
        e = p[:, (a + 2) % 3] - p[:, (a + 1) % 3]
        grad = np.cross(n, e) / (2 * mesh.areas[:, None])
        out[:, a] = np.cross(n, grad)
    return out


def assemble_many(mesh: SurfaceMesh, svals, order: int = 4) -> list[BoundaryOperatorSet]:
    """Operator sets for several frequencies from one pass over panel pairs."""
    svals = np.array([_check_frequency(s) for s in np.atleast_1d(svals)], dtype=np.complex128)
    ns, nt, nv = svals.size, mesh.n_triangles, mesh.n_vertices
    V = np.zeros((ns, nt, nt), np.complex128)
    K = np.zeros((ns, nt, nv), np.complex128)
    W = np.zeros((ns, nv, nv), np.complex128)
    pts, w, off = _singular_tables(order)
    r3, r6 = _panel_rule(mesh, 3), _panel_rule(mesh, 6)
    kernels.assemble_pairs(mesh.vertices, mesh.triangles, mesh.normals, mesh.areas,
                           mesh.centroids, mesh.diameters, surface_curls(mesh), svals,
                           (r3[0], r6[0]), (r3[1], r6[1]), (r3[2], r6[2]), pts, w, off, V, K, W)
    return [BoundaryOperatorSet(complex(s), V[i], K[i], W[i]) for i, s in enumerate(svals)]


def assemble_operators(mesh: SurfaceMesh, spaces: TraceSpaces | None, s, order: int = 4) -> BoundaryOperatorSet:
    if spaces is not None and spaces.mesh is not mesh:
        raise MeshError("trace spaces belong to a different mesh")
    return assemble_many(mesh, [s], order)[0]


@dataclass(frozen=True, eq=False)
class BlockOperatorSet:
    """Operators at a matrix frequency B, stage-major (m*rows, m*cols) blocks."""

    B: np.ndarray
    V: np.ndarray
    K: np.ndarray
    W: np.ndarray

    @property
    def Kt(self) -> np.ndarray:
        return self.K.T


def assemble_matrix_frequency(mesh: SurfaceMesh, spaces: TraceSpaces | None, B,
                              order: int = 4) -> BlockOperatorSet:
    """V(B), K(B), W(B) through the eigendecomposition of B.

    A defective B falls back to the contour calculus, which needs one
    scalar assembly per contour node.
    """
    B = as_complex_matrix(B)
    e = eig_small(B) if B.shape[0] <= 3 else None
    if e is not None and not e.defective:
        if np.min(e.eigenvalues.real) <= 0:
            raise DomainError("B must have spectrum in the open right half-plane")
        sets = assemble_many(mesh, e.eigenvalues, order)
        cache = dict(zip(e.eigenvalues, sets))
        lookup = lambda s: cache[s]
    else:
        lookup = lambda s: assemble_operators(mesh, None, s, order)
    parts = {}
    for name in ("V", "K", "W"):
        parts[name] = matrix_function(lambda s, nm=name: getattr(lookup(s), nm), B, e,
                                      force_contour=e is None or e.defective)
    return BlockOperatorSet(B, parts["V"], parts["K"], parts["W"])


def _point_distances(mesh: SurfaceMesh, points: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest panel centroid relative to that panel's size."""
    d = np.linalg.norm(points[:, None, :] - mesh.centroids[None, :, :], axis=2)
    return (d / mesh.diameters[None, :]).min(axis=1)


def evaluate_potentials(mesh: SurfaceMesh, phi, lam, s, points, npts: int = 6) -> np.ndarray:
    """-(S(s) lam) + (D(s) phi) at the given points.

    ``s`` may be a scalar, a vector of frequencies (densities then carry a
    leading frequency axis) or an m x m matrix B (densities stage-major,
    shape (m, n)).  Points closer to the surface than one panel diameter
    trigger a NearFieldWarning.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(_point_distances(mesh, points) < 1.0):
        warnings.warn("evaluation point within one panel diameter of the surface", NearFieldWarning)
    ref, w = triangle_rule(npts)
    s_arr = np.asarray(s, dtype=np.complex128)
    if s_arr.ndim == 2:
        e = eig_small(s_arr)
        if e.defective:
            raise DomainError("defective matrix frequency in potential evaluation")
        phi_t = e.Pinv @ np.asarray(phi, dtype=np.complex128)
        lam_t = e.Pinv @ np.asarray(lam, dtype=np.complex128)
        vals = evaluate_potentials(mesh, phi_t, lam_t, e.eigenvalues, points, npts)
        return e.P @ vals
    scalar = s_arr.ndim == 0
    svals = np.atleast_1d(s_arr)
    for sv in svals:
        _check_frequency(sv)
    phi = np.asarray(phi, dtype=np.complex128).reshape(svals.size, mesh.n_vertices)
    lam = np.asarray(lam, dtype=np.complex128).reshape(svals.size, mesh.n_triangles)
    out = np.zeros((svals.size, points.shape[0]), np.complex128)
    kernels.potentials_at(points, mesh.vertices, mesh.triangles, mesh.normals, mesh.areas,
                          svals, np.ascontiguousarray(ref), w, phi, lam, out)
    return out[0] if scalar else out


@dataclass(frozen=True)
class CalderonResidual:
    row1: float
    row2: float


def calderon_residual(mesh: SurfaceMesh, spaces: TraceSpaces, s, dirichlet, neumann,
                      ops: BoundaryOperatorSet | None = None) -> CalderonResidual:
    """Discrete residuals of (1/2 - K) g + V l = 0 and W g + (1/2 + K^T) l = 0.

    Both rows are Galerkin functionals; their norms are the L2 norms of the
    Riesz representatives in P0 and P1 respectively.
    """
    ops = assemble_operators(mesh, spaces, s) if ops is None else ops
    g = np.asarray(dirichlet, dtype=np.complex128)
    lam = np.asarray(neumann, dtype=np.complex128)
    M = spaces.mixed_mass
    r1 = 0.5 * (M.T @ g) - ops.K @ g + ops.V @ lam
    r2 = ops.W @ g + 0.5 * (M @ lam) + ops.Kt @ lam
    n1 = np.sqrt(np.real(np.vdot(r1, r1 / spaces.p0_mass)))
    M1 = spaces.p1_mass.tocsc()
    z = scipy.sparse.linalg.spsolve(M1, r2)
    n2 = np.sqrt(abs(np.real(np.vdot(r2, z))))
    return CalderonResidual(float(n1), float(n2))
