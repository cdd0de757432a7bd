"""Boundary loops of the quadric and finite spacelike curves.

A loop is stored by its sphere samples ``w_j`` at the uniform angles
``theta_j = 2 pi j / m``, interpolated by piecewise spherical geodesics; its
ambient lift at angle ``theta`` is the isotropic vector
``((cos theta, sin theta), w(theta))`` in the standard splitting.

Finite curves are closed polylines of quadric points with finite-difference
derivative estimates.
"""

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.optimize import nnls

from . import sphere
from .ambient import (
    AmbientSpace,
    DomainError,
    GeodesicType,
    TripleClass,
    classify_geodesic,
    classify_triple,
    sym3_eigvals,
    triple_signatures,
)

RATIO_TOL = 1e-9          # band around ratio 1 for photon / semi-positive calls
HULL_TOL = 1e-6           # default feasibility residual for hull membership
INTERIOR_MARGIN = 1e-8    # required pairing margin for interior points
MIN_CURVE_SAMPLES = 16    # finite-difference stencils need this many


class LoopError(ValueError):
    """Raised for loops outside an operation's admissible class."""


class HullSolverError(RuntimeError):
    """Feasibility solver failed; distinct from a clean 'not contained'."""


class LoopKind(enum.Enum):
    POSITIVE = "positive"
    SEMI_POSITIVE = "semi-positive"
    PHOTON = "photon"
    NOT_POSITIVE = "not-positive"


@dataclass(frozen=True)
class LoopClass:
    kind: LoopKind
    lipschitz: float


class BoundaryPoint(NamedTuple):
    """Isotropic ray in circle x sphere normalization."""

    u: np.ndarray
    w: np.ndarray

    def ambient(self):
        return np.concatenate([self.u, self.w])


@dataclass(frozen=True)
class LoopSpec:
    """Sampled boundary loop: map from the circle to the unit sphere."""

    space: AmbientSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != self.space.n + 1:
            raise LoopError(f"samples must be (m, {self.space.n + 1}) vectors")
        if v.shape[0] < 3:
            raise LoopError("need at least 3 samples")
        norms = np.linalg.norm(v, axis=1)
        bad = np.nonzero(np.abs(norms - 1.0) > 1e-12)[0]
        if bad.size:
            raise LoopError(f"sample {bad[0]} is not a unit vector")
        gaps = sphere.distance(v, np.roll(v, -1, axis=0))
        if np.any(gaps >= np.pi - 1e-6):
            raise LoopError("consecutive samples too far apart to interpolate")
        object.__setattr__(self, "values", v)

    @property
    def m(self):
        return self.values.shape[0]

    @property
    def angles(self):
        return 2.0 * np.pi * np.arange(self.m) / self.m

    def value_at(self, theta):
        """Piecewise-geodesic interpolation of the sphere map."""
        step = 2.0 * np.pi / self.m
        t = np.asarray(theta, dtype=float) % (2.0 * np.pi)
        j = np.minimum((t / step).astype(int), self.m - 1)
        frac = t / step - j
        return sphere.slerp(self.values[j], self.values[(j + 1) % self.m], frac)


def loop_lift(loop, theta):
    """Boundary point above angle theta: ((cos t, sin t), w(t))."""
    u = np.array([np.cos(theta), np.sin(theta)])
    return BoundaryPoint(u, loop.value_at(theta))


def lift_samples(loop):
    """Ambient isotropic lifts of all samples, shape (m, dim)."""
    a = loop.angles
    u = np.stack([np.cos(a), np.sin(a)], axis=1)
    return np.hstack([u, loop.values])


def ratio_matrix(loop):
    """Pairwise sphere-to-circle distance ratios (diagonal set to 0)."""
    a = loop.angles
    dth = np.abs(a[:, None] - a[None, :])
    dcirc = np.minimum(dth, 2.0 * np.pi - dth)
    dsph = sphere.distance(loop.values[:, None, :], loop.values[None, :, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(dcirc > 0, dsph / dcirc, 0.0)
    return r


def lipschitz_profile(loop):
    """Global Lipschitz constant of the sampled graph map.

    The per-segment interpolant speed equals the adjacent-pair ratio, so the
    maximum over all sample pairs covers both.  Returns (L_global, strict).
    """
    r = ratio_matrix(loop)
    lg = float(r.max())
    return lg, lg < 1.0


def classify_loop(loop):
    r = ratio_matrix(loop)
    m = loop.m
    off = ~np.eye(m, dtype=bool)
    lg = float(r.max())
    if np.all(np.abs(r[off] - 1.0) <= RATIO_TOL):
        return LoopClass(LoopKind.PHOTON, lg)
    if lg < 1.0:
        return LoopClass(LoopKind.POSITIVE, lg)
    if lg <= 1.0 + RATIO_TOL:
        return LoopClass(LoopKind.SEMI_POSITIVE, lg)
    return LoopClass(LoopKind.NOT_POSITIVE, lg)


def _hemisphere_center(values):
    mean = values.mean(axis=0)
    nrm = np.linalg.norm(mean)
    if nrm > 1e-6:
        c = mean / nrm
    else:
        # Loop has vanishing centroid (e.g. a great circle); use the
        # direction least represented by the samples.
        _, vecs = np.linalg.eigh(values.T @ values)
        c = vecs[:, 0]
    if np.any(sphere.distance(values, c) > np.pi / 2 + 1e-9):
        raise LoopError("loop is not contained in a closed hemisphere")
    return c


def approximate_positive(loop, eps):
    """Strictly contracting loop uniformly within eps of the input.

    Contracts every value along the geodesic toward the hemisphere center,
    then mollifies with a short periodic kernel.  The input must be
    positive, semi-positive, or a photon contained in a hemisphere.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    cls = classify_loop(loop)
    if cls.kind is LoopKind.NOT_POSITIVE:
        raise LoopError("loop admits no contracting approximation")
    if eps == 0:
        if cls.kind is not LoopKind.POSITIVE:
            raise LoopError("eps = 0 only allowed for an already positive loop")
        return loop
    center = _hemisphere_center(loop.values)
    kernel = np.array([0.25, 0.5, 0.25])
    for t in (0.5 * eps, 0.75 * eps, 0.9 * eps):
        toward = (1.0 - t) * loop.values + t * center
        nrm = np.linalg.norm(toward, axis=1, keepdims=True)
        if np.any(nrm < 1e-12):
            raise LoopError("contraction hit an antipodal degeneracy")
        vals = toward / nrm
        smoothed = (
            kernel[0] * np.roll(vals, 1, axis=0)
            + kernel[1] * vals
            + kernel[2] * np.roll(vals, -1, axis=0)
        )
        vals = sphere.project_to_sphere(smoothed)
        out = LoopSpec(loop.space, vals)
        dist = float(sphere.distance(loop.values, vals).max())
        if classify_loop(out).kind is LoopKind.POSITIVE and dist <= eps:
            return out
    raise LoopError("failed to produce a strictly contracting approximation")


def barycenter(space, l1, l2, l3):
    """Quadric point spanned symmetrically by a positive triple of isotropic
    lifts: rescale so all mutual pairings are -1 and normalize the sum."""
    lifts = [np.asarray(v, dtype=float) for v in (l1, l2, l3)]
    for v in lifts:
        if abs(space.q(v)) > 1e-9 * float((v * v).sum()):
            raise DomainError("barycenter inputs must be isotropic lifts")
    if classify_triple(space, *lifts) is not TripleClass.POSITIVE:
        raise DomainError("triple is not positive")
    c12 = space.pairing(lifts[0], lifts[1])
    c13 = space.pairing(lifts[0], lifts[2])
    c23 = space.pairing(lifts[1], lifts[2])
    if not (c12 < 0 and c13 < 0 and c23 < 0):
        raise DomainError("lifts are not on one cone component")
    t1 = np.sqrt(-c23 / (c12 * c13))
    t2 = np.sqrt(-c13 / (c12 * c23))
    t3 = np.sqrt(-c12 / (c13 * c23))
    b = t1 * lifts[0] + t2 * lifts[1] + t3 * lifts[2]
    return b / np.sqrt(6.0)


def interior_point(loop):
    """A quadric point with uniformly negative pairing against all lifted
    samples, built as the normalized average of barycenters over a fan of
    sampled positive triples."""
    cls = classify_loop(loop)
    if cls.kind not in (LoopKind.POSITIVE, LoopKind.SEMI_POSITIVE):
        raise LoopError(f"loop of class {cls.kind.value} has no interior point")
    lifts = lift_samples(loop)
    m = loop.m
    acc = np.zeros(loop.space.dim)
    count = 0
    for j in range(m):
        tri = (j, (j + m // 3) % m, (j + 2 * m // 3) % m)
        if len(set(tri)) < 3:
            continue
        try:
            if classify_triple(loop.space, *lifts[list(tri)]) is TripleClass.POSITIVE:
                acc += barycenter(loop.space, *lifts[list(tri)])
                count += 1
        except DomainError:
            continue
    if count == 0:
        raise LoopError("no positive triple found in the sample fan")
    p = loop.space.normalize_point(acc / count)
    margin = float(loop.space.pairing(lifts, p).max())
    if margin > -INTERIOR_MARGIN:
        raise LoopError(f"no interior margin achieved (worst pairing {margin})")
    return p


def hull_contains(space, lifts, x, tol=HULL_TOL):
    """Cone-feasibility test: is x a nonnegative combination of the lifts?

    Both x and the lifts are Euclid-normalized first (membership of the
    cone is scale-free).  Returns (contained, residual).
    """
    a = np.asarray(lifts, dtype=float)
    x = np.asarray(x, dtype=float)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ValueError("zero vector")
    cols = a / np.linalg.norm(a, axis=1, keepdims=True)
    try:
        _, resid = nnls(cols.T, x / nx)
    except Exception as exc:  # pragma: no cover - solver failure path
        raise HullSolverError(f"feasibility solver failed: {exc}") from exc
    return bool(resid <= tol), float(resid)


@dataclass(frozen=True)
class FiniteCurve:
    """Closed sampled spacelike curve in the quadric.

    Carries 5-point periodic finite-difference estimates of the first and
    second parameter derivatives; needs at least 16 samples.
    """

    space: AmbientSpace
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.space.dim:
            raise ValueError(f"points must be (m, {self.space.dim})")
        if pts.shape[0] < MIN_CURVE_SAMPLES:
            raise LoopError(
                f"insufficient sampling: need >= {MIN_CURVE_SAMPLES} points"
            )
        qq = self.space.q(pts)
        scale = np.maximum((pts * pts).sum(axis=1), 1.0)
        if np.any(np.abs(qq + 1.0) > 1e-9 * scale):
            raise DomainError("curve samples must lie on the quadric")
        for j in range(pts.shape[0]):
            k = (j + 1) % pts.shape[0]
            if classify_geodesic(self.space, pts[j], pts[k]) is not GeodesicType.SPACELIKE:
                raise DomainError(f"chord ({j},{k}) is not spacelike")
        object.__setattr__(self, "points", pts)

    @property
    def m(self):
        return self.points.shape[0]

    @cached_property
    def step(self):
        return 2.0 * np.pi / self.m

    @cached_property
    def tangents(self):
        p = self.points
        d = (
            -np.roll(p, -2, axis=0)
            + 8.0 * np.roll(p, -1, axis=0)
            - 8.0 * np.roll(p, 1, axis=0)
            + np.roll(p, 2, axis=0)
        ) / (12.0 * self.step)
        return d

    @cached_property
    def second_derivatives(self):
        p = self.points
        d2 = (
            -np.roll(p, -2, axis=0)
            + 16.0 * np.roll(p, -1, axis=0)
            - 30.0 * p
            + 16.0 * np.roll(p, 1, axis=0)
            - np.roll(p, 2, axis=0)
        ) / (12.0 * self.step**2)
        return d2

    @cached_property
    def covariant_accelerations(self):
        """Projection of the second derivative to the quadric tangent space."""
        p = self.points
        a = self.second_derivatives
        return a + self.space.pairing(a, p)[:, None] * p

    @cached_property
    def pairing_matrix(self):
        return (self.points * self.space.signs) @ self.points.T

    @cached_property
    def chord_distances(self):
        """Spatial distances between all sample pairs (requires all pairs
        acausal)."""
        pm = self.pairing_matrix
        off = ~np.eye(self.m, dtype=bool)
        if np.any(pm[off] > -1.0 + 1e-12):
            raise DomainError("curve has a non-spacelike sample pair")
        d = np.arccosh(np.maximum(-pm, 1.0))
        np.fill_diagonal(d, 0.0)
        return d

    @cached_property
    def edge_lengths(self):
        pm = self.pairing_matrix
        nxt = np.roll(np.arange(self.m), -1)
        return np.arccosh(np.maximum(-pm[np.arange(self.m), nxt], 1.0))

    @cached_property
    def arc_distances(self):
        """Shorter-arc polygonal distance between all sample pairs."""
        s = np.concatenate([[0.0], np.cumsum(self.edge_lengths)])
        total = s[-1]
        diff = np.abs(s[:-1, None] - s[None, :-1])
        return np.minimum(diff, total - diff)


def unpinched_delta(curve):
    """Smallest spatial distance among pairs whose chord/arc ratio drops to
    1/2; +inf when no pair qualifies."""
    d = curve.chord_distances
    arc = curve.arc_distances
    off = ~np.eye(curve.m, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(arc > 0, d / arc, np.inf)
    qual = off & (ratio <= 0.5)
    if not qual.any():
        return np.inf
    return float(d[qual].min())


def angular_width(curve):
    """Largest hyperbolic diameter, over base points, of the curve's
    projection to the orthogonal of (base point + tangent line)."""
    pts = curve.points
    tan = curve.tangents
    space = curve.space
    width = 0.0
    for j in range(curve.m):
        x = pts[j]
        qt = space.q(tan[j])
        if qt <= 0:
            raise LoopError(f"tangent at sample {j} is not spacelike")
        t = tan[j] / np.sqrt(qt)
        others = np.delete(pts, j, axis=0)
        proj = (
            others
            + space.pairing(others, x)[:, None] * x
            - space.pairing(others, t)[:, None] * t
        )
        qp = space.q(proj)
        if np.any(qp <= 0):
            raise LoopError(
                "projection has non-positive square; curve is not strongly "
                f"positive at sample {j}"
            )
        unit = proj / np.sqrt(qp)[:, None]
        pair = np.abs((unit * space.signs) @ unit.T)
        diam = float(np.arccosh(np.maximum(pair, 1.0)).max())
        width = max(width, diam)
    return width


@dataclass(frozen=True)
class StrongPositivityReport:
    triples_ok: bool
    triples_margin: float
    osculating_ok: bool
    osculating_margin: float
    mixed_ok: bool
    mixed_margin: float

    @property
    def ok(self):
        return self.triples_ok and self.osculating_ok and self.mixed_ok


def strongly_positive_check(curve, osc_tol=1e-8, batch=200_000):
    """Three-part strong positivity check of a sampled curve.

    (1) every sample triple spans signature (2,1); (2) the osculating plane
    at each sample is spacelike (positive definite Gram of tangent and
    covariant acceleration); (3) every mixed span of one sample with another
    sample's tangent line has signature (2,1).  Margins are signed; positive
    means pass.
    """
    space = curve.space
    pts = curve.points
    m = curve.m

    idx = np.array(
        [(i, j, k) for i in range(m) for j in range(i + 1, m) for k in range(j + 1, m)],
        dtype=int,
    )
    triples_ok = True
    worst_det = -np.inf
    sv = pts * space.signs
    pm = sv @ pts.T
    for lo in range(0, len(idx), batch):
        chunk = idx[lo : lo + batch]
        g = pm[chunk[:, :, None], chunk[:, None, :]]
        ev = sym3_eigvals(g)
        pos = (ev > 0).sum(axis=-1)
        neg = (ev < 0).sum(axis=-1)
        if not np.all((pos == 2) & (neg == 1)):
            triples_ok = False
        worst_det = max(worst_det, float(np.prod(ev, axis=-1).max()))
    triples_margin = -worst_det

    tan = curve.tangents
    acc = curve.covariant_accelerations
    g11 = space.q(tan)
    g12 = space.pairing(tan, acc)
    g22 = space.q(acc)
    tr = g11 + g22
    disc = np.sqrt(np.maximum(tr * tr - 4.0 * (g11 * g22 - g12 * g12), 0.0))
    lam_min = 0.5 * (tr - disc)
    lam_max = 0.5 * (tr + disc)
    rel = np.where(lam_max > 0, lam_min / np.maximum(lam_max, 1e-300), -1.0)
    osculating_margin = float(rel.min())
    osculating_ok = bool(osculating_margin > osc_tol)

    tn = tan / np.sqrt(np.maximum(space.q(tan), 1e-300))[:, None]
    st = tn * space.signs
    pt_t = pts @ st.T  # <x_i, t_j>
    t_t = np.ones(m)
    g = np.empty((m, m, 3, 3))
    g[:, :, 0, 0] = -1.0
    g[:, :, 1, 1] = -1.0
    g[:, :, 2, 2] = t_t[None, :]
    g[:, :, 0, 1] = pm
    g[:, :, 1, 0] = pm
    g[:, :, 0, 2] = pt_t
    g[:, :, 2, 0] = pt_t
    g[:, :, 1, 2] = (pts * st).sum(axis=1)[None, :] * np.ones((m, 1))
    g[:, :, 2, 1] = g[:, :, 1, 2]
    off = ~np.eye(m, dtype=bool)
    ev = sym3_eigvals(g[off])
    pos = (ev > 0).sum(axis=-1)
    neg = (ev < 0).sum(axis=-1)
    mixed_ok = bool(np.all((pos == 2) & (neg == 1)))
    mixed_margin = -float(np.prod(ev, axis=-1).max())

    return StrongPositivityReport(
        triples_ok and triples_margin > 0,
        triples_margin,
        osculating_ok,
        osculating_margin,
        mixed_ok and mixed_margin > 0,
        mixed_margin,
    )


def exhaustion_curve(loop, p, rho):
    """Radial sweep of the loop at spatial distance rho from an interior
    point p: lifts are scaled to pairing -1 against p and flowed along the
    unit spacelike directions through them."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    space = loop.space
    p = space.check_point(p, tol=1e-9)
    lifts = lift_samples(loop)
    pair = space.pairing(lifts, p)
    if np.any(pair >= 0):
        raise LoopError("point is not interior to the loop's hull")
    scaled = lifts / (-pair)[:, None]
    dirs = scaled - p
    samples = np.cosh(rho) * p + np.sinh(rho) * dirs
    return FiniteCurve(space, samples)
