import numpy as np
import pytest

from helpers import geodesic_quadrature_distance, random_isometry
from maxsurf.ambient import (
    AmbientSpace,
    DomainError,
    GeodesicType,
    PointedPlane,
    TripleClass,
    classify_geodesic,
    classify_triple,
    exp_point,
    parallel_transport,
    psi,
    psi_inv,
    spatial_distance,
    triple_gram,
    warped_projection,
)


@pytest.fixture(params=[1, 2, 3])
def space(request):
    return AmbientSpace(request.param)


def frame_of(space):
    return PointedPlane.standard(space)


def random_points(space, rng, k, spread=1.0):
    frame = frame_of(space)
    u = spread * 0.9 * rng.uniform(-0.6, 0.6, size=(k, 2))
    w = rng.standard_normal((k, space.n + 1))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return psi(frame, u, w)


class TestPairing:
    def test_signature_convention(self):
        sp = AmbientSpace(2)
        e = np.eye(sp.dim)
        assert sp.pairing(e[0], e[0]) == 1.0
        assert sp.pairing(e[2], e[2]) == -1.0
        assert sp.pairing(e[0], e[2]) == 0.0

    def test_bilinear_symmetric(self):
        sp = AmbientSpace(3)
        rng = np.random.default_rng(0)
        x, y, z = rng.standard_normal((3, sp.dim))
        assert sp.pairing(x, y) == pytest.approx(sp.pairing(y, x))
        assert sp.pairing(x + 2 * z, y) == pytest.approx(
            sp.pairing(x, y) + 2 * sp.pairing(z, y)
        )

    def test_dimension_mismatch(self):
        sp = AmbientSpace(1)
        with pytest.raises(ValueError):
            sp.pairing(np.zeros(3), np.zeros(4))


class TestClassifyGeodesic:
    def test_timelike_pair(self):
        sp = AmbientSpace(2)
        x = sp.basis_vector(2)
        y = np.zeros(sp.dim)
        y[2], y[3] = np.cos(0.5), np.sin(0.5)
        assert classify_geodesic(sp, x, y) is GeodesicType.TIMELIKE

    def test_spacelike_pair(self):
        sp = AmbientSpace(2)
        x = sp.basis_vector(2)
        y = np.zeros(sp.dim)
        y[0], y[2] = np.sinh(1.0), np.cosh(1.0)
        assert classify_geodesic(sp, x, y) is GeodesicType.SPACELIKE

    def test_lightlike_pair(self):
        sp = AmbientSpace(2)
        x = sp.basis_vector(2)
        y = x.copy()
        y[0] += 1.0
        y[3] += 1.0
        assert classify_geodesic(sp, x, y) is GeodesicType.LIGHTLIKE

    def test_identical_points_rejected(self):
        sp = AmbientSpace(1)
        x = sp.basis_vector(2)
        with pytest.raises(DomainError):
            classify_geodesic(sp, x, x)
        with pytest.raises(DomainError):
            classify_geodesic(sp, x, -x)

    def test_isometry_invariance(self, space):
        rng = np.random.default_rng(7)
        pts = random_points(space, rng, 12)
        for _ in range(5):
            g = random_isometry(space, rng)
            for i in range(0, 10, 2):
                a, b = pts[i], pts[i + 1]
                assert classify_geodesic(space, a, b) is classify_geodesic(
                    space, g @ a, g @ b
                )


class TestSpatialDistance:
    def test_closed_form_matches_quadrature_oracle(self):
        sp = AmbientSpace(2)
        t = 1.3
        x = sp.basis_vector(2)
        y = np.cosh(t) * x + np.sinh(t) * sp.basis_vector(0)
        oracle = geodesic_quadrature_distance(sp, x, y)
        assert oracle == pytest.approx(t, abs=1e-6)
        assert spatial_distance(sp, x, y) == pytest.approx(t, abs=1e-12)

    def test_quadrature_oracle_generic_pairs(self, space):
        rng = np.random.default_rng(5)
        pts = random_points(space, rng, 8, spread=0.5)
        for i in range(0, 8, 2):
            x, y = pts[i], pts[i + 1]
            if space.pairing(x, y) >= -1.0:
                continue
            d = spatial_distance(space, x, y)
            assert d == pytest.approx(
                geodesic_quadrature_distance(space, x, y), abs=2e-5
            )

    def test_coincident(self):
        sp = AmbientSpace(1)
        x = sp.basis_vector(2)
        assert spatial_distance(sp, x, x) == 0.0

    def test_timelike_pair_rejected(self):
        sp = AmbientSpace(2)
        x = sp.basis_vector(2)
        y = np.zeros(sp.dim)
        y[2], y[3] = np.cos(0.5), np.sin(0.5)
        with pytest.raises(DomainError):
            spatial_distance(sp, x, y)

    def test_symmetry(self, space):
        rng = np.random.default_rng(11)
        pts = random_points(space, rng, 6, spread=0.4)
        for i in range(0, 6, 2):
            x, y = pts[i], pts[i + 1]
            if space.pairing(x, y) < -1.0:
                assert spatial_distance(space, x, y) == pytest.approx(
                    spatial_distance(space, y, x), abs=1e-14
                )


class TestTriples:
    def test_boundary_triple_positive(self):
        sp = AmbientSpace(2)
        lifts = []
        for th in (0.0, 2.0, 4.0):
            v = np.zeros(sp.dim)
            v[0], v[1], v[2] = np.cos(th), np.sin(th), 1.0
            lifts.append(v)
        det, sig = triple_gram(sp, *lifts)
        evs = np.linalg.eigvalsh(
            np.array([[sp.pairing(a, b) for b in lifts] for a in lifts])
        )
        assert det == pytest.approx(np.prod(evs), rel=1e-9)
        assert det < 0
        assert sig == (2, 0, 1)
        assert classify_triple(sp, *lifts) is TripleClass.POSITIVE

    def test_fiber_triple_negative(self):
        sp = AmbientSpace(2)
        lifts = []
        for w in (np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0])):
            lifts.append(np.concatenate([[1.0, 0.0], w]))
        det, sig = triple_gram(sp, *lifts)
        assert det > 0
        assert sig == (1, 0, 2)
        assert classify_triple(sp, *lifts) is TripleClass.NEGATIVE

    def test_photon_pair_degenerate(self):
        sp = AmbientSpace(2)
        # two rays on one photon: same circle point, sphere values at
        # circle-distance equal to sphere-distance... simplest: pairing 0
        a = np.array([1.0, 0.0, 1.0, 0.0, 0.0])
        b = np.array([np.cos(1.0), np.sin(1.0), np.cos(1.0), np.sin(1.0), 0.0])
        assert sp.pairing(a, b) == pytest.approx(0.0, abs=1e-15)
        c = np.array([1.0, 0.0, 0.0, 1.0, 0.0])
        det, _ = triple_gram(sp, a, b, c)
        assert det == pytest.approx(0.0, abs=1e-12)
        assert classify_triple(sp, a, b, c) is TripleClass.DEGENERATE

    def test_plane_points_positive(self):
        sp = AmbientSpace(2)
        fr = PointedPlane.standard(sp)
        w0 = fr.fiber_basepoint
        pts = [psi(fr, u, w0) for u in (np.array([0.0, 0.0]),
                                        np.array([0.3, 0.0]),
                                        np.array([0.0, -0.4]))]
        assert classify_triple(sp, *pts) is TripleClass.POSITIVE

    def test_repeated_point_rejected(self):
        sp = AmbientSpace(1)
        x = sp.basis_vector(2)
        y = sp.basis_vector(3) + x * 0.0
        with pytest.raises(DomainError):
            classify_triple(sp, x, x, y)

    def test_permutation_and_scale_invariance(self, space):
        rng = np.random.default_rng(3)
        for _ in range(10):
            th = np.sort(rng.uniform(0, 2 * np.pi, 3))
            w = rng.standard_normal((3, space.n + 1))
            w /= np.linalg.norm(w, axis=1, keepdims=True)
            lifts = [
                np.concatenate([[np.cos(t), np.sin(t)], wv]) for t, wv in zip(th, w)
            ]
            _, sig = triple_gram(space, *lifts)
            for perm in ((1, 0, 2), (2, 1, 0), (1, 2, 0)):
                _, sig2 = triple_gram(space, *[lifts[i] for i in perm])
                assert sig2 == sig
            scales = rng.uniform(0.2, 5.0, 3)
            _, sig3 = triple_gram(space, *[s * l for s, l in zip(scales, lifts)])
            assert sig3 == sig


class TestWarpedCoordinates:
    def test_center(self, space):
        fr = frame_of(space)
        w0 = fr.fiber_basepoint
        x = psi(fr, np.zeros(2), w0)
        assert np.allclose(x, fr.point, atol=1e-14)
        u, w = psi_inv(fr, fr.point)
        assert np.allclose(u, 0.0, atol=1e-14)
        assert np.allclose(w, w0, atol=1e-14)

    def test_quadric_identity(self, space):
        fr = frame_of(space)
        rng = np.random.default_rng(1)
        u = rng.uniform(-0.7, 0.7, (100, 2)) * 0.7
        w = rng.standard_normal((100, space.n + 1))
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        x = psi(fr, u, w)
        assert np.abs(space.q(x) + 1.0).max() < 1e-12

    def test_roundtrip(self, space):
        fr = frame_of(space)
        rng = np.random.default_rng(2)
        u = rng.uniform(-0.999, 0.999, (10_000, 2)) / np.sqrt(2)
        w = rng.standard_normal((10_000, space.n + 1))
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        x = psi(fr, u, w)
        u2, w2 = psi_inv(fr, x)
        assert np.abs(u2 - u).max() < 1e-12
        assert np.abs(w2 - w).max() < 1e-12

    def test_disk_boundary_rejected(self, space):
        fr = frame_of(space)
        with pytest.raises(DomainError):
            psi(fr, np.array([1.0, 0.0]), fr.fiber_basepoint)

    def test_non_point_rejected(self, space):
        fr = frame_of(space)
        with pytest.raises(DomainError):
            psi_inv(fr, 0.5 * fr.point)

    def test_radius_monotone_in_distance(self, space):
        fr = frame_of(space)
        v = fr.u_basis[0]
        radii = []
        for t in (0.5, 1.0, 2.0, 4.0):
            x = exp_point(space, fr.point, v, t)
            u, _ = psi_inv(fr, x)
            radii.append(np.linalg.norm(u))
        assert all(a < b for a, b in zip(radii, radii[1:]))
        assert radii[-1] < 1.0


class TestWarpedProjection:
    def test_fixes_plane(self, space):
        fr = frame_of(space)
        x = psi(fr, np.array([0.4, -0.2]), fr.fiber_basepoint)
        assert np.allclose(warped_projection(fr, x), x, atol=1e-12)

    def test_fiber_pairs_above_minus_one(self, space):
        fr = frame_of(space)
        rng = np.random.default_rng(4)
        u = np.array([0.35, 0.1])
        for _ in range(20):
            w = rng.standard_normal((2, space.n + 1))
            w /= np.linalg.norm(w, axis=1, keepdims=True)
            if np.allclose(w[0], w[1]):
                continue
            x1, x2 = psi(fr, u, w[0]), psi(fr, u, w[1])
            assert space.pairing(x1, x2) > -1.0

    def test_projection_increases_polygonal_length(self, space):
        fr = frame_of(space)
        for m in (32, 64, 128):
            th = np.linspace(0, 2 * np.pi, m, endpoint=False)
            u = 0.3 * np.stack([np.cos(th), np.sin(th)], axis=1)
            tangent = 0.2 * np.stack(
                [np.sin(th)] + [np.zeros(m)] * (space.n - 1), axis=1
            )
            from maxsurf import sphere as sph

            w = sph.exp_map(fr.fiber_basepoint, np.hstack([np.zeros((m, 1)), tangent]))
            pts = psi(fr, u, w)
            proj = warped_projection(fr, pts)

            def polylen(p):
                s = 0.0
                for i in range(m):
                    s += spatial_distance(space, p[i], p[(i + 1) % m])
                return s

            assert polylen(proj) >= polylen(pts) - 1e-9


class TestExpPoint:
    def test_zero(self, space):
        fr = frame_of(space)
        v = fr.u_basis[1]
        assert np.allclose(exp_point(space, fr.point, v, 0.0), fr.point)

    def test_distance_matches(self, space):
        fr = frame_of(space)
        v = (fr.u_basis[0] + 0.5 * fr.u_basis[1]) / np.sqrt(1.25)
        x = exp_point(space, fr.point, v, 2.0)
        assert spatial_distance(space, fr.point, x) == pytest.approx(2.0, abs=1e-12)

    def test_stays_on_quadric(self, space):
        rng = np.random.default_rng(9)
        fr = frame_of(space)
        for _ in range(50):
            c = rng.standard_normal(2)
            v = c[0] * fr.u_basis[0] + c[1] * fr.u_basis[1]
            v /= np.sqrt(space.q(v))
            x = exp_point(space, fr.point, v, rng.uniform(0, 3))
            assert abs(space.q(x) + 1.0) < 1e-12
            tv = fr.v_basis[0] if space.n else None
            if tv is not None:
                y = exp_point(space, fr.point, tv, rng.uniform(0, 3))
                assert abs(space.q(y) + 1.0) < 1e-12

    def test_additivity_along_ray(self, space):
        fr = frame_of(space)
        v = fr.u_basis[0]
        a = exp_point(space, fr.point, v, 0.7)
        b = exp_point(space, fr.point, v, 1.9)
        assert spatial_distance(space, a, b) == pytest.approx(1.2, abs=1e-10)

    def test_lightlike_rejected(self, space):
        fr = frame_of(space)
        v = fr.u_basis[0] + fr.v_basis[0] if space.n else fr.u_basis[0]
        if space.n:
            with pytest.raises(DomainError):
                exp_point(space, fr.point, v, 1.0)

    def test_non_tangent_rejected(self, space):
        fr = frame_of(space)
        with pytest.raises(DomainError):
            exp_point(space, fr.point, fr.point + fr.u_basis[0], 1.0)


class TestPointedPlaneConstruction:
    def test_from_vectors_orthonormalizes(self, space):
        rng = np.random.default_rng(21)
        p = space.normalize_point(
            np.concatenate([[0.3, -0.1], [1.2] + [0.1] * space.n])
        )
        fr = PointedPlane.from_vectors(space, p)
        assert np.allclose(fr.point, p)

    def test_transport_preserves_pairings(self, space):
        fr = frame_of(space)
        rng = np.random.default_rng(13)
        x = fr.point
        y = exp_point(space, x, fr.u_basis[0], 1.4)
        vecs = np.vstack([fr.u_basis, fr.v_basis])
        moved = parallel_transport(space, x, y, vecs)
        g0 = (vecs * space.signs) @ vecs.T
        g1 = (moved * space.signs) @ moved.T
        assert np.allclose(g0, g1, atol=1e-12)
        assert np.abs(space.pairing(moved, y)).max() < 1e-12
