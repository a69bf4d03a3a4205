"""Closed triangulated surfaces: validation, generators and a small ASCII format."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    validate_on_init: bool = field(default=True, repr=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must have shape (n, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshError(f"triangles must have shape (n, 3), got {t.shape}")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if self.validate_on_init:
            self.validate()

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @cached_property
    def _cross(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    @cached_property
    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self._cross, axis=1)

    @cached_property
    def normals(self) -> np.ndarray:
        return self._cross / (2.0 * self.areas[:, None])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def diameters(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
        return np.linalg.norm(e, axis=2).max(axis=1)

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted vertex pairs."""
        e = self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        return np.unique(np.sort(e, axis=1), axis=0)

    @cached_property
    def vertex_triangles(self) -> list:
        out = [[] for _ in range(self.n_vertices)]
        for i, tri in enumerate(self.triangles):
            for v in tri:
                out[v].append(i)
        return out

    def signed_volume(self) -> float:
        p = self.vertices[self.triangles]
        return float(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0)

    def validate(self) -> None:
        """Closed, consistently outward oriented, no degenerate panels."""
        t = self.triangles
        if t.size == 0:
            raise MeshError("mesh has no triangles")
        if t.min() < 0 or t.max() >= self.n_vertices:
            raise MeshError("triangle refers to a missing vertex")
        if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
            raise MeshError("triangle with repeated vertex")
        bbox = np.ptp(self.vertices, axis=0).max()
        if np.any(self.areas <= 1e-14 * bbox ** 2):
            raise MeshError("degenerate triangle")
        directed = t[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        und, counts = np.unique(np.sort(directed, axis=1), axis=0, return_counts=True)
        if np.any(counts != 2):
            raise MeshError("surface is not closed: some edge is not shared by exactly two triangles")
        if np.unique(directed, axis=0).shape[0] != directed.shape[0]:
            raise MeshError("inconsistent triangle orientation")
        if self.signed_volume() <= 0:
            raise MeshError("triangles are oriented inward (signed volume <= 0)")

    def refine(self) -> "SurfaceMesh":
        """Split each triangle into four by edge bisection."""
        edges = self.edges
        nv = self.n_vertices
        mid = {tuple(e): nv + i for i, e in enumerate(edges)}
        newv = np.vstack([self.vertices, 0.5 * (self.vertices[edges[:, 0]] + self.vertices[edges[:, 1]])])
        tris = []
        for a, b, c in self.triangles:
            ab = mid[(min(a, b), max(a, b))]
            bc = mid[(min(b, c), max(b, c))]
            ca = mid[(min(c, a), max(c, a))]
            tris += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        return SurfaceMesh(newv, np.array(tris))


def _orient_outward(vertices, triangles, center):
    p = vertices[triangles]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    flip = np.einsum("ij,ij->i", n, p.mean(axis=1) - center) < 0
    triangles = triangles.copy()
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    return triangles


def cube_surface(n: int, side: float = 1.0, center=(0.0, 0.0, 0.0)) -> SurfaceMesh:
    """Surface of an axis-aligned cube with n x n quads per face.

    Every quad is split along the diagonal joining its lowest and highest
    corner, which matches the boundary of the 6-tetrahedra hex split.
    """
    if n < 1:
        raise MeshError("cube needs at least one subdivision")
    center = np.asarray(center, dtype=float)
    grid = {}
    verts = []

    def vid(ijk):
        if ijk not in grid:
            grid[ijk] = len(verts)
            verts.append(ijk)
        return grid[ijk]

    tris = []
    for axis in range(3):
        a1, a2 = [d for d in range(3) if d != axis]
        for level in (0, n):
            for i in range(n):
                for j in range(n):
                    def corner(di, dj):
                        ijk = [0, 0, 0]
                        ijk[axis], ijk[a1], ijk[a2] = level, i + di, j + dj
                        return vid(tuple(ijk))
                    c00, c10, c11, c01 = corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)
                    tris += [(c00, c10, c11), (c00, c11, c01)]
    v = np.array(verts, dtype=float) * (side / n) - 0.5 * side + center
    t = _orient_outward(v, np.array(tris), center)
    return SurfaceMesh(v, t)


def icosphere(level: int = 0, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> SurfaceMesh:
    """Icosahedron refined ``level`` times with vertices projected to the sphere."""
    phi = (1 + 5 ** 0.5) / 2
    v = np.array([[-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
                  [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
                  [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1]], dtype=float)
    t = np.array([[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
                  [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
                  [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
                  [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    v /= np.linalg.norm(v, axis=1)[:, None]
    mesh = SurfaceMesh(v, t)
    for _ in range(level):
        mesh = mesh.refine()
        w = mesh.vertices / np.linalg.norm(mesh.vertices, axis=1)[:, None]
        mesh = SurfaceMesh(w, mesh.triangles)
    c = np.asarray(center, dtype=float)
    return SurfaceMesh(mesh.vertices * radius + c, mesh.triangles)


def write_mesh(mesh: SurfaceMesh, path) -> None:
    """Vertex count and triangle count, then coordinates, then 0-based triples."""
    lines = [f"{mesh.n_vertices} {mesh.n_triangles}"]
    lines += ["%.17g %.17g %.17g" % tuple(p) for p in mesh.vertices]
    lines += ["%d %d %d" % tuple(t) for t in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> SurfaceMesh:
    tokens = Path(path).read_text().split()
    try:
        nv, nt = int(tokens[0]), int(tokens[1])
        body = tokens[2:]
        if len(body) != 3 * nv + 3 * nt:
            raise MeshError(f"{path}: expected {3 * nv + 3 * nt} numbers after the header, "
                            f"found {len(body)}")
        v = np.array(body[: 3 * nv], dtype=float).reshape(nv, 3)
        t = np.array(body[3 * nv:], dtype=np.int64).reshape(nt, 3)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"{path}: malformed mesh file ({exc})") from None
    return SurfaceMesh(v, t)
