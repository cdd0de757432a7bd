"""Triangulated parameter meshes over disk-like regions.

The solver works on graphs over a region of the warped-coordinate disk, so
the mesh lives in the flat parameter plane; the geometry comes from the
fiber values attached by the surface layer.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class DiskMesh:
    """Oriented triangulation of a disk-like parameter region.

    params    : (N, 2) node coordinates
    triangles : (T, 3) oriented (counter-clockwise) node triples
    boundary  : (B,) node indices forming the boundary cycle, in order
    """

    params: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.params, dtype=float)
        t = np.asarray(self.triangles, dtype=np.int64)
        b = np.asarray(self.boundary, dtype=np.int64)
        object.__setattr__(self, "params", p)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "boundary", b)
        self._validate()

    def _validate(self):
        p, t, b = self.params, self.triangles, self.boundary
        if p.ndim != 2 or p.shape[1] != 2:
            raise MeshError("params must be (N, 2)")
        if t.min() < 0 or t.max() >= len(p):
            raise MeshError("triangle index out of range")
        e1 = p[t[:, 1]] - p[t[:, 0]]
        e2 = p[t[:, 2]] - p[t[:, 0]]
        areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        if np.any(areas <= 0):
            raise MeshError("triangles must be positively oriented and non-degenerate")
        directed = {}
        for k, tri in enumerate(t):
            for a, bb in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (int(a), int(bb))
                if key in directed:
                    raise MeshError(f"directed edge {key} appears twice")
                directed[key] = k
        boundary_edges = set()
        for (a, bb) in directed:
            if (bb, a) not in directed:
                boundary_edges.add((a, bb))
        cycle_edges = {
            (int(b[i]), int(b[(i + 1) % len(b)])) for i in range(len(b))
        }
        if boundary_edges != cycle_edges:
            raise MeshError("boundary cycle does not match the mesh boundary")

    @property
    def n_nodes(self):
        return self.params.shape[0]

    @cached_property
    def is_boundary(self):
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.boundary] = True
        return mask

    @cached_property
    def interior(self):
        return np.nonzero(~self.is_boundary)[0]

    @cached_property
    def edges(self):
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def h_param(self):
        """Mesh size in parameter coordinates: max edge length."""
        d = self.params[self.edges[:, 0]] - self.params[self.edges[:, 1]]
        return float(np.linalg.norm(d, axis=1).max())

    @cached_property
    def node_triangles(self):
        """List of incident triangle indices per node."""
        out = [[] for _ in range(self.n_nodes)]
        for k, tri in enumerate(self.triangles):
            for v in tri:
                out[int(v)].append(k)
        return out

    @cached_property
    def node_neighbors(self):
        out = [set() for _ in range(self.n_nodes)]
        for a, b in self.edges:
            out[int(a)].add(int(b))
            out[int(b)].add(int(a))
        return [sorted(s) for s in out]


def check_star_shaped(boundary_pts):
    """Validate that a boundary polyline winds once around the origin with
    strictly increasing angle (so radial meshing is well defined)."""
    b = np.asarray(boundary_pts, dtype=float)
    r = np.linalg.norm(b, axis=1)
    if np.any(r < 1e-12):
        raise MeshError("boundary passes through the mesh center")
    ang = np.arctan2(b[:, 1], b[:, 0])
    steps = np.diff(np.concatenate([ang, ang[:1]]))
    steps = (steps + np.pi) % (2 * np.pi) - np.pi
    if np.any(steps <= 0):
        raise MeshError("boundary polyline is not star-shaped about the origin")
    if abs(steps.sum() - 2 * np.pi) > 1e-9:
        raise MeshError("boundary polyline does not wind once around the origin")


def structured_polar_mesh(boundary_pts, n_rings, grading="sin"):
    """Structured triangulation of the region bounded by a star-shaped
    polyline: scaled copies of the boundary with a center node, with ring
    spacing graded toward the boundary.
    """
    b = np.asarray(boundary_pts, dtype=float)
    m = b.shape[0]
    if m < 3:
        raise MeshError("need at least 3 boundary points")
    if n_rings < 1:
        raise MeshError("need at least one ring")
    check_star_shaped(b)
    i = np.arange(1, n_rings + 1)
    if grading == "sin":
        s = np.sin(0.5 * np.pi * i / n_rings)
    elif grading == "uniform":
        s = i / n_rings
    else:
        raise MeshError(f"unknown grading {grading!r}")
    params = np.vstack([np.zeros((1, 2))] + [si * b for si in s])

    def idx(ring, j):
        return 1 + (ring - 1) * m + (j % m)

    tris = []
    for j in range(m):
        tris.append((0, idx(1, j), idx(1, j + 1)))
    for ring in range(1, n_rings):
        for j in range(m):
            a, c = idx(ring, j), idx(ring, j + 1)
            d, e = idx(ring + 1, j), idx(ring + 1, j + 1)
            tris.append((a, d, e))
            tris.append((a, e, c))
    boundary = np.array([idx(n_rings, j) for j in range(m)])
    return DiskMesh(params, np.array(tris, dtype=np.int64), boundary)


def disk_mesh(radius, n_rings, n_theta, grading="sin"):
    """Structured mesh of the round disk of the given parameter radius."""
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    b = radius * np.stack([np.cos(th), np.sin(th)], axis=1)
    return structured_polar_mesh(b, n_rings, grading=grading)


def locate_points(mesh, queries):
    """Barycentric location of query points in the mesh.

    Returns (tri_index, bary) arrays; tri_index is -1 for points outside
    every triangle (beyond a small tolerance).
    """
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    t = mesh.triangles
    p = mesh.params
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    v0 = b - a
    v1 = c - a
    den = v0[:, 0] * v1[:, 1] - v0[:, 1] * v1[:, 0]
    out_tri = np.full(len(q), -1, dtype=int)
    out_bary = np.zeros((len(q), 3))
    for i, z in enumerate(q):
        d = z - a
        l1 = (d[:, 0] * v1[:, 1] - d[:, 1] * v1[:, 0]) / den
        l2 = (v0[:, 0] * d[:, 1] - v0[:, 1] * d[:, 0]) / den
        l0 = 1.0 - l1 - l2
        lam = np.stack([l0, l1, l2], axis=1)
        inside = lam.min(axis=1) >= -1e-10
        if inside.any():
            k = int(np.argmax(np.where(inside, lam.min(axis=1), -np.inf)))
            out_tri[i] = k
            out_bary[i] = np.clip(lam[k], 0.0, 1.0)
            out_bary[i] /= out_bary[i].sum()
    return out_tri, out_bary
