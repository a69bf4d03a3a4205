"""P1 finite elements on intervals and structured tetrahedral boxes."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
import scipy.sparse

from .bem3d.mesh import SurfaceMesh
from .tableaus import ButcherTableau


class FemInputError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class VolumeMesh:
    """Vertices (n, dim), elements (ne, dim + 1) and the boundary description.

    ``boundary_vertices`` lists volume vertex indices of the trace DOFs in
    trace order: the two endpoints in 1D, the surface vertices in 3D where
    ``surface`` is the boundary SurfaceMesh numbered in that order.
    """

    dim: int
    vertices: np.ndarray
    elements: np.ndarray
    boundary_vertices: np.ndarray
    surface: SurfaceMesh | None = None

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def volumes(self) -> np.ndarray:
        p = self.vertices[self.elements]
        if self.dim == 1:
            return p[:, 1, 0] - p[:, 0, 0]
        d = p[:, 1:] - p[:, :1]
        return np.linalg.det(d) / 6.0

    @property
    def h(self) -> float:
        p = self.vertices[self.elements]
        k = p.shape[1]
        return float(max(np.linalg.norm(p[:, a] - p[:, b], axis=1).max()
                         for a in range(k) for b in range(a + 1, k)))


def build_interval_mesh(a: float, b: float, n: int) -> VolumeMesh:
    if n < 1:
        raise FemInputError("interval mesh needs at least one element")
    if not b > a:
        raise FemInputError("interval must satisfy a < b")
    x = np.linspace(a, b, n + 1)[:, None]
    el = np.stack([np.arange(n), np.arange(1, n + 1)], axis=1)
    return VolumeMesh(1, x, el, np.array([0, n]))


def _kuhn_tets():
    """The 6 tetrahedra of the unit cube sharing the diagonal (0,0,0)-(1,1,1)."""
    tets = []
    for perm in permutations(range(3)):
        c = np.zeros(3, dtype=int)
        path = [c.copy()]
        for ax in perm:
            c[ax] += 1
            path.append(c.copy())
        tets.append([int(p[0] + 2 * p[1] + 4 * p[2]) for p in path])
    return np.array(tets)


def build_box_mesh(center, side: float, n: int) -> VolumeMesh:
    """Cube of the given side split into n^3 hexahedra of 6 tetrahedra each."""
    if n < 1:
        raise FemInputError("box mesh needs at least one subdivision")
    if side <= 0:
        raise FemInputError("side length must be positive")
    center = np.asarray(center, dtype=float)
    g = np.arange(n + 1)
    I, J, K = np.meshgrid(g, g, g, indexing="ij")
    idx = (I * (n + 1) + J) * (n + 1) + K
    verts = np.stack([I.ravel(), J.ravel(), K.ravel()], axis=1) * (side / n) - 0.5 * side + center
    corners = np.empty((n, n, n, 8), dtype=np.int64)
    for c in range(8):
        dx, dy, dz = c & 1, (c >> 1) & 1, (c >> 2) & 1
        corners[..., c] = idx[dx:n + dx, dy:n + dy, dz:n + dz]
    corners = corners.reshape(-1, 8)
    tets = corners[:, _kuhn_tets()].reshape(-1, 4)
    p = verts[tets]
    neg = np.linalg.det(p[:, 1:] - p[:, :1]) < 0
    tets[neg] = tets[neg][:, [0, 2, 1, 3]]

    faces = np.concatenate([tets[:, [1, 2, 3]], tets[:, [0, 3, 2]], tets[:, [0, 1, 3]], tets[:, [0, 2, 1]]])
    key = np.sort(faces, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    bfaces = faces[counts[inv.ravel()] == 1]
    bverts = np.unique(bfaces)
    local = np.full(verts.shape[0], -1, dtype=np.int64)
    local[bverts] = np.arange(bverts.size)
    surf = SurfaceMesh(verts[bverts], local[bfaces])
    return VolumeMesh(3, verts, tets, bverts, surf)


@dataclass(frozen=True, eq=False)
class InteriorForms:
    mesh: VolumeMesh
    M: scipy.sparse.csr_matrix
    S: scipy.sparse.csr_matrix
    MV: scipy.sparse.csr_matrix
    trace: scipy.sparse.csr_matrix

    @property
    def H(self) -> scipy.sparse.csr_matrix:
        """S + M_V, the discrete Hamiltonian form."""
        return (self.S + self.MV).tocsr()


def _gradients(mesh: VolumeMesh):
    p = mesh.vertices[mesh.elements]
    if mesh.dim == 1:
        h = p[:, 1, 0] - p[:, 0, 0]
        g = np.stack([-1 / h, 1 / h], axis=1)[:, :, None]
        return g, h
    d = p[:, 1:] - p[:, :1]
    # columns of d^{-1} are the gradients of the barycentrics 1..3
    g123 = np.transpose(np.linalg.inv(d), (0, 2, 1))
    g = np.concatenate([-g123.sum(axis=1, keepdims=True), g123], axis=1)
    return g, np.linalg.det(d) / 6.0


def _scatter(mesh, local):
    el = mesh.elements
    k = el.shape[1]
    rows = np.repeat(el, k, axis=1).ravel()
    cols = np.tile(el, (1, k)).ravel()
    n = mesh.n_vertices
    return scipy.sparse.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def _sample_potential(potential, x):
    if potential is None:
        return np.zeros(x.shape[0])
    if np.isscalar(potential):
        vals = np.full(x.shape[0], float(potential))
    else:
        try:
            vals = np.asarray(potential(x), dtype=float)
            if vals.shape != (x.shape[0],):
                raise ValueError
        except (TypeError, ValueError):
            vals = np.array([float(potential(xi)) for xi in x])
    if not np.all(np.isfinite(vals)):
        raise FemInputError("potential has non-finite samples")
    if np.iscomplexobj(vals):
        raise FemInputError("potential must be real valued")
    return vals


def lumped_mass(mesh: VolumeMesh) -> np.ndarray:
    vol = np.abs(mesh.volumes)
    k = mesh.elements.shape[1]
    return np.bincount(mesh.elements.ravel(), np.repeat(vol / k, k), minlength=mesh.n_vertices)


def assemble_interior(mesh: VolumeMesh, potential=None) -> InteriorForms:
    """Exact P1 mass and stiffness, vertex-quadrature potential term."""
    g, vol = _gradients(mesh)
    k = mesh.elements.shape[1]
    local_s = np.einsum("eid,ejd->eij", g, g) * vol[:, None, None]
    local_m = vol[:, None, None] * (np.ones((k, k)) + np.eye(k))[None] / ((k + 1) * k)
    M = _scatter(mesh, local_m)
    S = _scatter(mesh, local_s)
    x = mesh.vertices if mesh.dim > 1 else mesh.vertices[:, 0]
    pot = _sample_potential(potential, mesh.vertices if mesh.dim > 1 else x[:, None])
    MV = scipy.sparse.diags(pot * lumped_mass(mesh)).tocsr()
    nb = mesh.boundary_vertices.size
    trace = scipy.sparse.csr_matrix((np.ones(nb), (np.arange(nb), mesh.boundary_vertices)),
                                    shape=(nb, mesh.n_vertices))
    return InteriorForms(mesh, M, S, MV, trace)


@dataclass(frozen=True, eq=False)
class StepForm:
    """(-i A^{-1} (x) M) + k I (x) (S + M_V) and the map u -> (d (x) M) u."""

    forms: InteriorForms
    tableau: ButcherTableau
    k: float

    @property
    def operator(self) -> scipy.sparse.csr_matrix:
        t, f = self.tableau, self.forms
        return (scipy.sparse.kron(-1j * t.Ainv, f.M)
                + self.k * scipy.sparse.kron(np.eye(t.m), f.H)).tocsr()

    def rhs(self, u) -> np.ndarray:
        """Stage-major (m, n) right-hand side."""
        Mu = self.forms.M @ np.asarray(u)
        return self.tableau.d[:, None] * Mu[None, :]

    def shifted(self, mu: complex):
        """Decoupled stage operator -i mu M + k H for an eigenvalue mu of A^{-1}."""
        return (-1j * mu * self.forms.M + self.k * self.forms.H).tocsc()


def step_form(forms: InteriorForms, tableau: ButcherTableau, k: float) -> StepForm:
    if k < 0:
        raise FemInputError("time step must be non-negative")
    return StepForm(forms, tableau, float(k))


# Gauss rules on the reference simplex: barycentric points and weights summing to 1
_GAUSS_1D = (np.array([[0.5 + 0.5 / np.sqrt(3), 0.5 - 0.5 / np.sqrt(3)],
                       [0.5 - 0.5 / np.sqrt(3), 0.5 + 0.5 / np.sqrt(3)]]), np.array([0.5, 0.5]))
_a, _b = 0.5854101966249685, 0.1381966011250105
_GAUSS_TET = (np.array([[_a, _b, _b, _b], [_b, _a, _b, _b], [_b, _b, _a, _b], [_b, _b, _b, _a]]),
              np.full(4, 0.25))


def _element_rule(mesh: VolumeMesh):
    return _GAUSS_1D if mesh.dim == 1 else _GAUSS_TET


def quadrature_points(mesh: VolumeMesh):
    """Physical points (ne, nq, dim), weights (ne, nq) and barycentrics (nq, dim+1)."""
    bary, w = _element_rule(mesh)
    p = mesh.vertices[mesh.elements]
    pts = np.einsum("qa,ead->eqd", bary, p)
    return pts, np.abs(mesh.volumes)[:, None] * w[None, :], bary


def _eval(f, pts, t):
    flat = pts.reshape(-1, pts.shape[-1])
    if pts.shape[-1] == 1:
        flat = flat[:, 0]
    return np.asarray(f(flat, t))


def l2_error(mesh: VolumeMesh, coefs, exact, t: float) -> float:
    """||u_h - u(t)||_{L2} with the 2-point (1D) or 4-point (3D) Gauss rule."""
    pts, w, bary = quadrature_points(mesh)
    uh = np.einsum("qa,ea->eq", bary, np.asarray(coefs)[mesh.elements])
    ue = _eval(exact, pts, t).reshape(uh.shape)
    return float(np.sqrt(np.sum(w * np.abs(uh - ue) ** 2)))


def h1_seminorm_error(mesh: VolumeMesh, coefs, exact_grad, t: float) -> float:
    pts, w, _ = quadrature_points(mesh)
    g, _ = _gradients(mesh)
    guh = np.einsum("ead,ea->ed", g, np.asarray(coefs)[mesh.elements])
    ge = _eval(exact_grad, pts, t).reshape(pts.shape[0], pts.shape[1], mesh.dim)
    return float(np.sqrt(np.sum(w[..., None] * np.abs(guh[:, None, :] - ge) ** 2)))


def h1_error(mesh: VolumeMesh, coefs, exact, exact_grad, t: float) -> float:
    return float(np.hypot(l2_error(mesh, coefs, exact, t),
                          h1_seminorm_error(mesh, coefs, exact_grad, t)))


def interpolate(mesh: VolumeMesh, f, t: float | None = None) -> np.ndarray:
    x = mesh.vertices[:, 0] if mesh.dim == 1 else mesh.vertices
    return np.asarray(f(x) if t is None else f(x, t), dtype=np.complex128)
