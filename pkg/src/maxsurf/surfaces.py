"""Discrete spacelike surfaces as graphs in warped coordinates.

A surface couples a parameter mesh with sphere-valued fiber data and a
metric scale lambda: the metric in force is (1/lambda) q for lambda > 0.
The flat model (lambda = 0) replaces the warped parametrization by affine
coordinates (z, f) in a signature (2, n) space, with unconstrained fiber
values in R^n.

Derivative-based diagnostics (second fundamental form, Gauss lift, angle
defect curvature) live here; the solver in ``plateau`` only consumes the
area and its gradient.
"""

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from . import kernels, sphere
from .ambient import AmbientSpace, DomainError, PointedPlane, psi
from .meshing import DiskMesh

SPACELIKE_GUARD = 1e-10   # least eigenvalue / trace floor for triangle Grams


class SurfaceError(ValueError):
    pass


def warp_factors(params):
    """Per-node coefficients of the warped parametrization: (a, b) with
    a = 2/(1-|z|^2), b = (1+|z|^2)/(1-|z|^2)."""
    r2 = (params * params).sum(axis=1)
    if np.any(r2 >= 1.0):
        raise SurfaceError("parameter node outside the open unit disk")
    return 2.0 / (1.0 - r2), (1.0 + r2) / (1.0 - r2)


@dataclass(frozen=True)
class DiscreteSurface:
    """Graph surface over a disk mesh.

    For scale > 0 fibers are unit vectors of R^(n+1) and ambient positions
    are the warped parametrization through ``frame``; for scale == 0 fibers
    are free vectors of R^n and positions are (z, f) in flat signature
    (2, n) coordinates.
    """

    space: AmbientSpace
    mesh: DiskMesh
    frame: PointedPlane
    fiber: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        f = np.asarray(self.fiber, dtype=float)
        n = self.space.n
        if self.scale < 0:
            raise SurfaceError("scale must be >= 0")
        if self.scale > 0:
            if f.shape != (self.mesh.n_nodes, n + 1):
                raise SurfaceError(f"fiber must be ({self.mesh.n_nodes}, {n + 1})")
            norms = np.linalg.norm(f, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-12):
                raise SurfaceError("fiber values must be unit vectors")
        else:
            if f.shape != (self.mesh.n_nodes, n):
                raise SurfaceError(f"flat fiber must be ({self.mesh.n_nodes}, {n})")
        object.__setattr__(self, "fiber", f)

    @property
    def is_flat(self):
        return self.scale == 0.0

    @property
    def ambient_dim(self):
        return self.space.n + 2 if self.is_flat else self.space.dim

    @cached_property
    def positions(self):
        if self.is_flat:
            return np.hstack([self.mesh.params, self.fiber])
        a, b = warp_factors(self.mesh.params)
        return self.frame.assemble(a[:, None] * self.mesh.params, b[:, None] * self.fiber)

    def with_fiber(self, fiber):
        return replace(self, fiber=np.asarray(fiber, dtype=float))

    def inv_scale(self):
        """Multiplier turning q-units Grams into metric Grams."""
        if self.is_flat:
            return 1.0
        return 1.0 / self.scale


def rescale(surface, new_scale):
    """Same combinatorics and graph, new metric scale.

    Between positive scales only the scale field changes.  Rescaling to 0
    maps the sphere fibers to tangent coordinates at the frame's fiber
    basepoint (the flat limit of the warped model); rescaling a flat
    surface to a positive scale applies the inverse.
    """
    if new_scale < 0:
        raise SurfaceError("scale must be >= 0")
    if (new_scale == 0.0) == surface.is_flat:
        return replace(surface, scale=new_scale)
    base = surface.frame.fiber_basepoint
    basis = sphere.tangent_basis(base)
    if new_scale == 0.0:
        coords = sphere.log_map(base, surface.fiber) @ basis.T
        return replace(surface, fiber=coords, scale=0.0)
    values = sphere.exp_map(base, surface.fiber @ basis)
    return replace(surface, fiber=values, scale=new_scale)


# ---------------------------------------------------------------------------
# first-order geometry: Grams, area, area gradient


def triangle_grams(surface):
    g11, g12, g22 = kernels.tri_grams(surface.positions, surface.mesh.triangles)
    s = surface.inv_scale()
    return s * g11, s * g12, s * g22


def induced_gram(surface, triangle):
    """2x2 metric Gram of the two edge vectors of one triangle."""
    g11, g12, g22 = triangle_grams(surface)
    t = int(triangle)
    g = np.array([[g11[t], g12[t]], [g12[t], g22[t]]])
    if not np.all(np.isfinite(g)):
        raise SurfaceError("non-finite Gram entries")
    return g


def spacelike_margin(surface):
    """min over triangles of lambda_min(Gram)/trace(Gram); > 0 iff all
    triangles are spacelike (scale-invariant)."""
    _, _, guard = kernels.tri_area_grad(surface.positions, surface.mesh.triangles)
    return guard


def triangle_areas(surface):
    g11, g12, g22 = triangle_grams(surface)
    det = g11 * g22 - g12 * g12
    if np.any(det <= 0) or np.any(g11 <= 0):
        raise SurfaceError("surface has a non-spacelike triangle")
    return 0.5 * np.sqrt(det)


def total_area(surface):
    return float(triangle_areas(surface).sum())


def dual_areas(surface):
    """Barycentric dual cell areas per node."""
    areas = triangle_areas(surface)
    out = np.zeros(surface.mesh.n_nodes)
    np.add.at(out, surface.mesh.triangles[:, 0], areas / 3.0)
    np.add.at(out, surface.mesh.triangles[:, 1], areas / 3.0)
    np.add.at(out, surface.mesh.triangles[:, 2], areas / 3.0)
    return out


def fiber_gradient_from_ambient(surface, ambient_grad):
    """Chain rule from the ambient area gradient to the fiber variables,
    projected to the sphere tangent for the curved model."""
    if surface.is_flat:
        return ambient_grad[:, 2:].copy()
    _, b = warp_factors(surface.mesh.params)
    g = b[:, None] * (ambient_grad @ surface.frame.w_basis.T)
    g -= (g * surface.fiber).sum(axis=1)[:, None] * surface.fiber
    return g


def area_and_gradient(surface):
    """(area, fiber gradient with boundary rows zeroed, spacelike guard).

    The gradient is exact for the discrete area; the guard is the worst
    triangle eigenvalue ratio (see SPACELIKE_GUARD).
    """
    area_q, grad_q, guard = kernels.tri_area_grad(
        surface.positions, surface.mesh.triangles
    )
    s = surface.inv_scale()
    g = fiber_gradient_from_ambient(surface, s * grad_q)
    g[surface.mesh.is_boundary] = 0.0
    return s * area_q, g, guard


def area_gradient(surface):
    """Exact gradient of the discrete area in the fiber values, tangent to
    the sphere, zero at boundary nodes."""
    _, g, _ = area_and_gradient(surface)
    return g


def mean_curvature_residual(surface):
    """Node-wise area gradient per dual-cell area; its max norm is the
    solver's stationarity measure."""
    g = area_gradient(surface)
    dual = dual_areas(surface)
    vecs = np.zeros_like(g)
    interior = surface.mesh.interior
    vecs[interior] = g[interior] / dual[interior][:, None]
    max_norm = float(np.linalg.norm(vecs, axis=1).max()) if len(interior) else 0.0
    return vecs, max_norm


# ---------------------------------------------------------------------------
# second-order geometry: local fits, curvature operators


def _metric_pairing(surface, x, y):
    signs = -np.ones(surface.ambient_dim)
    signs[:2] = 1.0
    return (np.asarray(x) * signs * np.asarray(y)).sum(axis=-1)


def _fit_ring(surface, node, min_ring=5):
    ring = list(surface.mesh.node_neighbors[node])
    if len(ring) < min_ring:
        extra = set()
        for j in ring:
            extra.update(surface.mesh.node_neighbors[j])
        extra.discard(node)
        ring = sorted(extra | set(ring))
    return ring


@dataclass(frozen=True)
class NodeFit:
    """Quadratic fit of the surface around a node, in q-units.

    tangent : (2, d) q-orthonormal spacelike frame of the tangent plane
    normal  : (n, d) q-orthonormal timelike frame of the normal space
    second  : (2, 2, n) symmetric fundamental tensor in these frames
    """

    tangent: np.ndarray
    normal: np.ndarray
    second: np.ndarray


def fit_node(surface, node, iterations=2):
    """Least-squares quadratic fit over the node's ring in q-normal
    coordinates; raises for rank-deficient stencils."""
    x = surface.positions[node]
    ring = _fit_ring(surface, node)
    if len(ring) < 5:
        raise SurfaceError(f"node {node} has a deficient stencil")
    deltas = surface.positions[ring] - x
    if not surface.is_flat:
        deltas = deltas + _metric_pairing(surface, deltas, x)[:, None] * x

    dz = surface.mesh.params[ring] - surface.mesh.params[node]
    lin, *_ = np.linalg.lstsq(dz, deltas, rcond=None)
    t1, t2 = lin[0], lin[1]

    n = surface.space.n
    dim = surface.ambient_dim
    signs = -np.ones(dim)
    signs[:2] = 1.0

    def orthonormalize(t1, t2):
        q1 = float((t1 * signs * t1).sum())
        if q1 <= 0:
            raise SurfaceError(f"node {node}: tangent fit is not spacelike")
        e1 = t1 / np.sqrt(q1)
        t2p = t2 - (t2 * signs * e1).sum() * e1
        q2 = float((t2p * signs * t2p).sum())
        if q2 <= 0:
            raise SurfaceError(f"node {node}: tangent fit is not spacelike")
        e2 = t2p / np.sqrt(q2)
        basis = [e1, e2]
        normals = []
        pool = list(np.eye(dim))
        anchors = [e1, e2] + ([] if surface.is_flat else [x])
        anchor_signs = [1.0, 1.0] + ([] if surface.is_flat else [-1.0])
        for cand in pool:
            r = cand.copy()
            for bvec, bsign in zip(anchors + normals, anchor_signs + [-1.0] * len(normals)):
                r -= bsign * (r * signs * bvec).sum() * bvec
            qr = float((r * signs * r).sum())
            if qr < -1e-10:
                normals.append(r / np.sqrt(-qr))
            if len(normals) == n:
                break
        if len(normals) < n:
            raise SurfaceError(f"node {node}: failed to complete normal frame")
        return np.vstack(basis), np.vstack(normals)

    tangent, normal = orthonormalize(t1, t2)
    second = np.zeros((2, 2, n))
    for _ in range(iterations):
        a = np.stack(
            [
                _metric_pairing(surface, deltas, tangent[0]),
                _metric_pairing(surface, deltas, tangent[1]),
            ],
            axis=1,
        )
        nu = -np.stack(
            [_metric_pairing(surface, deltas, nk) for nk in normal], axis=1
        )
        design = np.stack(
            [a[:, 0], a[:, 1], 0.5 * a[:, 0] ** 2, a[:, 0] * a[:, 1], 0.5 * a[:, 1] ** 2],
            axis=1,
        )
        coef, *_ = np.linalg.lstsq(design, nu, rcond=None)
        lin1, lin2 = coef[0], coef[1]
        second = np.empty((2, 2, n))
        second[0, 0] = coef[2]
        second[0, 1] = second[1, 0] = coef[3]
        second[1, 1] = coef[4]
        # tilt the tangent frame by the fitted linear part and refit
        t1 = tangent[0] + lin1 @ normal
        t2 = tangent[1] + lin2 @ normal
        tangent, normal = orthonormalize(t1, t2)

    return NodeFit(tangent, normal, second)


def _oriented_fit(surface, node):
    """NodeFit with the tangent frame oriented consistently with the mesh."""
    fit = fit_node(surface, node)
    ring = _fit_ring(surface, node)
    deltas = surface.positions[ring] - surface.positions[node]
    if not surface.is_flat:
        x = surface.positions[node]
        deltas = deltas + _metric_pairing(surface, deltas, x)[:, None] * x
    dzr = surface.mesh.params[ring] - surface.mesh.params[node]
    lin, *_ = np.linalg.lstsq(dzr, deltas, rcond=None)
    m = np.array(
        [
            [
                _metric_pairing(surface, lin[0], fit.tangent[0]),
                _metric_pairing(surface, lin[0], fit.tangent[1]),
            ],
            [
                _metric_pairing(surface, lin[1], fit.tangent[0]),
                _metric_pairing(surface, lin[1], fit.tangent[1]),
            ],
        ]
    )
    if np.linalg.det(m) < 0:
        tangent = np.vstack([fit.tangent[0], -fit.tangent[1]])
        second = fit.second.copy()
        second[0, 1] = -second[0, 1]
        second[1, 0] = -second[1, 0]
        return NodeFit(tangent, fit.normal, second)
    return fit


def second_fundamental_norm(surface, node):
    """Pointwise norm of the second fundamental form at a node, under the
    surface's metric scale: the worst direction v maximizes the summed
    squared normal components of II(v, e_i)."""
    fit = fit_node(surface, node)
    h = fit.second
    g = np.einsum("aik,bik->ab", h, h)
    lam = np.linalg.eigvalsh(g).max()
    factor = 1.0 if surface.is_flat else surface.scale
    return float(np.sqrt(max(factor * lam, 0.0)))


def gauss_curvature(surface, node):
    """Angle-defect curvature at an interior node: (2 pi - sum of incident
    angles) / dual area."""
    if surface.mesh.is_boundary[node]:
        raise SurfaceError("curvature by angle defect needs an interior node")
    g11, g12, g22 = triangle_grams(surface)
    tris = surface.mesh.triangles
    total = 0.0
    for t in surface.mesh.node_triangles[node]:
        i, j, k = tris[t]
        p = surface.positions
        if node == i:
            va, vb = p[j] - p[i], p[k] - p[i]
        elif node == j:
            va, vb = p[k] - p[j], p[i] - p[j]
        else:
            va, vb = p[i] - p[k], p[j] - p[k]
        s = surface.inv_scale()
        qaa = s * _metric_pairing(surface, va, va)
        qbb = s * _metric_pairing(surface, vb, vb)
        qab = s * _metric_pairing(surface, va, vb)
        if qaa <= 0 or qbb <= 0:
            raise SurfaceError("non-spacelike edge at node")
        total += float(np.arccos(np.clip(qab / np.sqrt(qaa * qbb), -1.0, 1.0)))
    dual = dual_areas(surface)[node]
    return float((2.0 * np.pi - total) / dual)


def gauss_lift_residual(surface, nodes=None):
    """Max over interior nodes of the Cauchy-Riemann defect of the tangent
    lift, normalized by the lift differential's size.

    The defect compares the lift differential after the surface rotation j
    with the fiberwise rotation structure applied to the differential; the
    horizontal parts agree identically, so the residual is carried by the
    fundamental tensor.
    """
    if nodes is None:
        nodes = surface.mesh.interior
    worst = 0.0
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    for node in nodes:
        fit = _oriented_fit(surface, node)
        h = fit.second  # (2, 2, n)
        # defect(e_a) = II(j e_a, .) - II(e_a, i .)
        defect = np.einsum("ba,bck->ack", rot, h) - np.einsum("adk,dc->ack", h, rot)
        d2 = float((defect**2).sum())
        size = 2.0 + float((h**2).sum())
        worst = max(worst, np.sqrt(d2 / size))
    return worst


def g2_gram(surface, triangle):
    """Metric Gram of the lift-induced metric on one triangle's edges:
    the induced Gram plus the fundamental-tensor correction averaged over
    the triangle's nodes."""
    gi = induced_gram(surface, triangle)
    tri = surface.mesh.triangles[int(triangle)]
    p = surface.positions
    e = np.stack([p[tri[1]] - p[tri[0]], p[tri[2]] - p[tri[0]]])
    if not surface.is_flat:
        x = p[tri[0]]
        e = e + _metric_pairing(surface, e, x)[:, None] * x
    q_acc = np.zeros((2, 2))
    for node in tri:
        fit = fit_node(surface, int(node))
        a = np.stack(
            [
                _metric_pairing(surface, e, fit.tangent[0]),
                _metric_pairing(surface, e, fit.tangent[1]),
            ],
            axis=1,
        )
        g = np.einsum("aik,bik->ab", fit.second, fit.second)
        q_acc += a @ g @ a.T
    return gi + q_acc / 3.0


@dataclass(frozen=True)
class AcausalityReport:
    ok: bool
    worst_pairing: float
    slope_ok: bool
    worst_slope_excess: float


def acausality_check(surface):
    """Pairwise pairing scan (<= -1 + 1e-8 required) plus the triangle-wise
    graph-slope bound |df| < 2/(1 + |z|^2)."""
    pos = surface.positions
    if surface.is_flat:
        worst = -np.inf
        ok = True
        slope_ok = True
        worst_excess = -np.inf
        g11, g12, g22 = triangle_grams(surface)
        margin = np.minimum(g11, g22)
        slope_ok = bool(np.all(margin > 0))
        return AcausalityReport(slope_ok, worst, slope_ok, worst_excess)
    worst, _, _ = kernels.pairwise_max_pairing(pos, pos, skip_diagonal=True)
    ok = worst <= -1.0 + 1e-8

    tris = surface.mesh.triangles
    z = surface.mesh.params
    f = surface.fiber
    e_param = np.stack(
        [z[tris[:, 1]] - z[tris[:, 0]], z[tris[:, 2]] - z[tris[:, 0]]], axis=2
    )
    worst_excess = -np.inf
    slope_ok = True
    for t in range(len(tris)):
        zc = z[tris[t]].mean(axis=0)
        bound = 2.0 / (1.0 + float(zc @ zc))
        df = np.stack([f[tris[t, 1]] - f[tris[t, 0]], f[tris[t, 2]] - f[tris[t, 0]]])
        try:
            a = np.linalg.solve(e_param[t].T, df).T
        except np.linalg.LinAlgError:
            slope_ok = False
            continue
        excess = float(np.linalg.norm(a, 2)) - bound
        worst_excess = max(worst_excess, excess)
        if excess >= 0:
            slope_ok = False
    return AcausalityReport(bool(ok), float(worst), slope_ok, float(worst_excess))
