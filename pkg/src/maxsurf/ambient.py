"""The quadratic space of signature (2, n+1) and the quadric of unit-timelike
vectors.

Conventions used throughout the package:

* the ambient space ``E`` is R^(n+3) with the quadratic form
  ``q(x) = x_1^2 + x_2^2 - sum_{k>=3} x_k^2`` (two leading +1 coordinates);
* points of the quadric are plain float64 arrays ``x`` with ``q(x) = -1``;
* isotropic boundary rays are normalized as pairs ``(u, w)`` with ``u`` a
  unit vector of the positive 2-plane and ``w`` a unit vector of the
  negative (n+1)-space, lifting to the isotropic ambient vector ``(u, w)``.

All functions are pure; nothing here mutates its inputs.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

TOL_CLASSIFY = 1e-9        # half-width of the lightlike band on |<x,y>| - 1
TOL_POINT = 1e-12          # |q(x) + 1| tolerance for points of the quadric
TOL_FRAME = 1e-10          # frame orthonormality tolerance
FRAME_PIVOT_MIN = 1e-8     # smallest |q| pivot accepted when orthonormalizing


class DomainError(ValueError):
    """Raised when an operation is applied outside its geometric domain."""


@dataclass(frozen=True)
class AmbientSpace:
    """The quadratic space R^(2, n+1) with its fixed coordinate convention."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("spatial codimension n must be >= 1")

    @property
    def dim(self):
        return self.n + 3

    @property
    def signs(self):
        s = -np.ones(self.dim)
        s[:2] = 1.0
        return s

    def pairing(self, x, y):
        """Bilinear pairing <x, y>; broadcasts over leading axes."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape[-1] != self.dim or y.shape[-1] != self.dim:
            raise ValueError(
                f"dimension mismatch: expected {self.dim}, "
                f"got {x.shape[-1]} and {y.shape[-1]}"
            )
        return (x * self.signs * y).sum(axis=-1)

    def q(self, x):
        return self.pairing(x, x)

    def basis_vector(self, k):
        e = np.zeros(self.dim)
        e[k] = 1.0
        return e

    def check_point(self, x, tol=TOL_POINT):
        x = np.asarray(x, dtype=float)
        if abs(self.q(x) + 1.0) > tol:
            raise DomainError(f"not a point of the quadric: q(x) = {self.q(x)!r}")
        return x

    def normalize_point(self, x):
        """Rescale a timelike vector onto the quadric q = -1."""
        x = np.asarray(x, dtype=float)
        qx = self.q(x)
        if qx >= 0:
            raise DomainError("cannot normalize a non-timelike vector to the quadric")
        return x / np.sqrt(-qx)


class GeodesicType(enum.Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"


class TripleClass(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    DEGENERATE = "degenerate"


def classify_geodesic(space, x, y, tol=TOL_CLASSIFY):
    """Type of the geodesic through two distinct quadric points.

    Spacelike iff |<x,y>| > 1, timelike iff |<x,y>| < 1, lightlike in the
    tolerance band.  Identical points (as rays) are rejected.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scale = max(np.abs(x).max(), np.abs(y).max(), 1.0)
    if min(np.abs(x - y).max(), np.abs(x + y).max()) <= 1e-12 * scale:
        raise DomainError("identical points do not determine a geodesic type")
    p = abs(space.pairing(x, y))
    if p > 1.0 + tol:
        return GeodesicType.SPACELIKE
    if p < 1.0 - tol:
        return GeodesicType.TIMELIKE
    return GeodesicType.LIGHTLIKE


def spatial_distance(space, x, y):
    """Length of the spacelike geodesic joining an acausal pair.

    Defined through the closed form arccosh(-<x,y>), validated in the test
    suite against quadrature of sqrt(q(gamma')) along the projective-line
    geodesic.  Requires <x,y> <= -1 (same lift component).
    """
    p = space.pairing(x, y)
    if p > -1.0 + TOL_CLASSIFY:
        if p >= 1.0 - TOL_CLASSIFY:
            raise DomainError("points lie on opposite lift components")
        raise DomainError(f"pair is not acausal: <x,y> = {p}")
    return float(np.arccosh(-min(p, -1.0)))


def sym3_eigvals(grams):
    """Eigenvalues of a batch of symmetric 3x3 matrices, ascending.

    Analytic (trigonometric) method; grams has shape (..., 3, 3).
    """
    g = np.asarray(grams, dtype=float)
    tr = np.trace(g, axis1=-2, axis2=-1)
    m = tr / 3.0
    b = g - m[..., None, None] * np.eye(3)
    # p = sqrt(tr(B^2) / 6), with B the traceless part
    p2 = np.einsum("...ij,...ij->...", b, b) / 6.0
    p = np.sqrt(np.maximum(p2, 0.0))
    safe = p > 0
    detb = np.linalg.det(b)
    r = np.zeros_like(detb)
    r[safe] = detb[safe] / (2.0 * p[safe] ** 3)
    r = np.clip(r, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    e1 = m + 2.0 * p * np.cos(phi)
    e3 = m + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    e2 = tr - e1 - e3
    return np.stack([e3, e2, e1], axis=-1)


def gram_matrix(space, vectors):
    v = np.asarray(vectors, dtype=float)
    return (v * space.signs) @ v.T


def triple_gram(space, x1, x2, x3, dep_tol=1e-10):
    """Determinant and eigenvalue signature of the Gram matrix of a triple.

    Returns ``(det, (pos, zero, neg))``.  Near-dependent triples are
    reported through a zero count > 0: eigenvalues below ``dep_tol`` times
    the squared scale of the input vectors count as zero, so that triples
    whose span degenerates (e.g. points of one photon) are not classified
    from rounding noise.
    """
    v = np.asarray([x1, x2, x3], dtype=float)
    g = gram_matrix(space, v)
    det = float(np.linalg.det(g))
    ev = sym3_eigvals(g)
    scale = max(float((v * v).sum(axis=1).max()), 1e-300)
    zero = np.abs(ev) <= dep_tol * scale
    pos = int((~zero & (ev > 0)).sum())
    neg = int((~zero & (ev < 0)).sum())
    return det, (pos, int(zero.sum()), neg)


def classify_triple(space, x1, x2, x3, dep_tol=1e-10):
    """Positive / Negative / Degenerate span classification of a triple."""
    for a, b in ((x1, x2), (x1, x3), (x2, x3)):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if np.linalg.norm(nb * a - na * b) <= 1e-12 * na * nb:
            raise DomainError("triple contains a repeated point")
    _, (pos, zero, neg) = triple_gram(space, x1, x2, x3, dep_tol=dep_tol)
    if (pos, zero, neg) == (2, 0, 1):
        return TripleClass.POSITIVE
    if (pos, zero, neg) == (1, 0, 2):
        return TripleClass.NEGATIVE
    return TripleClass.DEGENERATE


def triple_signatures(space, vectors, triples, dep_tol=1e-10):
    """Vectorized Gram signatures for many index triples.

    vectors : (m, dim) array, triples : (K, 3) integer array.
    Returns (pos, zero, neg) arrays of shape (K,).
    """
    v = np.asarray(vectors, dtype=float)
    sv = v * space.signs
    p = sv @ v.T
    g = p[triples[:, :, None], triples[:, None, :]]
    ev = sym3_eigvals(g)
    norms2 = (v * v).sum(axis=1)
    scale = np.maximum(norms2[triples].max(axis=-1), 1e-300)
    zero = np.abs(ev) <= dep_tol * scale[..., None]
    pos = (~zero & (ev > 0)).sum(axis=-1)
    neg = (~zero & (ev < 0)).sum(axis=-1)
    return pos, zero.sum(axis=-1), neg


def exp_point(space, p, v, rho):
    """Geodesic flow from p along a unit spacelike or timelike direction.

    v must be q-orthogonal to p with q(v) = +1 or -1 (tolerance 1e-8);
    lightlike directions are rejected.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if abs(space.pairing(p, v)) > 1e-10:
        raise DomainError("direction is not tangent: <p,v> != 0")
    qv = space.q(v)
    if abs(qv - 1.0) <= 1e-8:
        v = v / np.sqrt(qv)
        return np.cosh(rho) * p + np.sinh(rho) * v
    if abs(qv + 1.0) <= 1e-8:
        v = v / np.sqrt(-qv)
        return np.cos(rho) * p + np.sin(rho) * v
    raise DomainError(f"direction must be unit spacelike or timelike, q(v) = {qv}")


def log_point(space, x, y):
    """Inverse of exp_point for an acausal pair: the unit spacelike direction
    u at x with exp_point(x, u, d) = y, together with d."""
    d = spatial_distance(space, x, y)
    if d == 0.0:
        raise DomainError("log of coincident points")
    u = (y - np.cosh(d) * x) / np.sinh(d)
    return u, d


def parallel_transport(space, x, y, vectors):
    """Closed-form parallel transport of tangent vectors from x to y along
    the connecting geodesic of the quadric.

    Spacelike and timelike geodesics are supported; lightlike separation is
    rejected.  vectors is (..., dim) tangent at x.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    vecs = np.asarray(vectors, dtype=float)
    kind = classify_geodesic(space, x, y)
    if kind is GeodesicType.LIGHTLIKE:
        raise DomainError("parallel transport undefined along a lightlike geodesic")
    c = space.pairing(x, y)
    if kind is GeodesicType.SPACELIKE:
        if c > 0:
            raise DomainError("transport across lift components")
        d = np.arccosh(-c)
        u = (y - np.cosh(d) * x) / np.sinh(d)
        tang_end = np.sinh(d) * x + np.cosh(d) * u
        coef = space.pairing(vecs, u)[..., None]
        return vecs + coef * (tang_end - u)
    d = np.arccos(np.clip(-c, -1.0, 1.0))
    u = (y - np.cos(d) * x) / np.sin(d)
    tang_end = -np.sin(d) * x + np.cos(d) * u
    coef = -space.pairing(vecs, u)[..., None]
    return vecs + coef * (tang_end - u)


@dataclass(frozen=True)
class PointedPlane:
    """A base point together with a totally geodesic hyperbolic plane
    through it, stored as a q-orthonormal frame.

    ``point`` spans the oriented negative line, ``u_basis`` (2 rows) the
    positive plane, and ``v_basis`` (n rows) the remaining negative
    directions.  The fiber coordinates pack the point direction first:
    w-coordinates are (n+1)-vectors over the basis [point, v_1 .. v_n].
    """

    space: AmbientSpace
    point: np.ndarray
    u_basis: np.ndarray
    v_basis: np.ndarray

    def __post_init__(self):
        vecs = np.vstack([self.point[None, :], self.u_basis, self.v_basis])
        g = gram_matrix(self.space, vecs)
        expect = np.diag(np.concatenate([[-1.0], [1.0, 1.0], -np.ones(self.space.n)]))
        if not np.allclose(g, expect, atol=TOL_FRAME):
            raise DomainError("frame is not q-orthonormal")

    @classmethod
    def standard(cls, space):
        e = np.eye(space.dim)
        return cls(space, e[2], e[:2], e[3:])

    @classmethod
    def from_vectors(cls, space, point, candidates=None):
        """Build a frame by q-orthonormalizing ``point`` and candidate
        vectors, pivoting on |q| and completing from the identity basis.

        The first two accepted non-point directions must be spacelike; the
        rest must be timelike.  Pivots below FRAME_PIVOT_MIN are rejected.
        """
        point = space.normalize_point(point)
        pool = [] if candidates is None else [np.asarray(c, float) for c in candidates]
        pool += [space.basis_vector(k) for k in range(space.dim)]
        accepted = [point]
        qsigns = [-1.0]
        for target_sign, count in ((1.0, 2), (-1.0, space.n)):
            found = 0
            while found < count:
                best, best_q = None, 0.0
                for c in pool:
                    r = c.copy()
                    for b, s in zip(accepted, qsigns):
                        r -= s * space.pairing(r, b) * b
                    qr = space.q(r)
                    if np.sign(qr) == target_sign and abs(qr) > abs(best_q):
                        best, best_q = r, qr
                if best is None or abs(best_q) < FRAME_PIVOT_MIN:
                    raise DomainError("degenerate frame: no acceptable pivot")
                accepted.append(best / np.sqrt(abs(best_q)))
                qsigns.append(target_sign)
                found += 1
        u = np.vstack(accepted[1:3])
        v = np.vstack(accepted[3:]) if space.n else np.empty((0, space.dim))
        return cls(space, point, u, v)

    @property
    def w_basis(self):
        return np.vstack([self.point[None, :], self.v_basis])

    @property
    def fiber_basepoint(self):
        """The sphere point representing the frame's own fiber direction."""
        w = np.zeros(self.space.n + 1)
        w[0] = 1.0
        return w

    def coords(self, x):
        """Split an ambient vector into (a, b): positive-plane coordinates a
        (2,) and negative-space coordinates b (n+1,)."""
        x = np.asarray(x, dtype=float)
        a = (self.u_basis * self.space.signs) @ np.moveaxis(x, -1, 0)
        b = -(self.w_basis * self.space.signs) @ np.moveaxis(x, -1, 0)
        return np.moveaxis(a, 0, -1), np.moveaxis(b, 0, -1)

    def assemble(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return a @ self.u_basis + b @ self.w_basis


def psi(frame, u, w):
    """Warped parametrization of the quadric by disk x sphere.

    u : (..., 2) open-unit-disk coordinates in the positive plane,
    w : (..., n+1) unit vectors of the negative space.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    r2 = (u * u).sum(axis=-1)
    if np.any(r2 >= 1.0):
        raise DomainError("disk coordinate outside the open unit disk")
    a = 2.0 / (1.0 - r2)
    b = (1.0 + r2) / (1.0 - r2)
    return frame.assemble(a[..., None] * u, b[..., None] * w)


def psi_inv(frame, x):
    """Inverse warped parametrization; returns (u, w)."""
    a, b = frame.coords(x)
    bn = np.sqrt((b * b).sum(axis=-1))
    if np.any(bn < 1.0 - 1e-9):
        raise DomainError("vector is not on the quadric")
    w = b / bn[..., None]
    u = a / (bn + 1.0)[..., None]
    return u, w


def warped_projection(frame, x):
    """Fiberwise retraction onto the frame's hyperbolic plane."""
    u, _ = psi_inv(frame, x)
    n1 = frame.space.n + 1
    base = np.zeros(n1)
    base[0] = 1.0
    w = np.broadcast_to(base, u.shape[:-1] + (n1,))
    return psi(frame, u, w)
