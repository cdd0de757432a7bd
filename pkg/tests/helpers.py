"""Shared fixtures: isometry sampling, loop generators, quadrature oracles."""

import numpy as np
from scipy.linalg import expm

from maxsurf import sphere
from maxsurf.ambient import AmbientSpace
from maxsurf.loops import LoopSpec, lipschitz_profile


def random_isometry(space, rng, scale=0.6):
    """Random element of the identity component of the q-orthogonal group,
    built from the exponential of a random Lie-algebra element."""
    d = space.dim
    a = rng.standard_normal((d, d))
    a = a - a.T
    x = np.diag(space.signs) @ a
    return expm(scale * x)


def spectral_signature(space, g, tol=1e-9):
    ev = np.linalg.eigvalsh((g * space.signs[None, :]) @ g.T)
    return ev


def constant_loop(space, m=32, w=None):
    n1 = space.n + 1
    if w is None:
        w = np.zeros(n1)
        w[0] = 1.0
    return LoopSpec(space, np.tile(w, (m, 1)))


def photon_loop(space, m=32):
    """Isometric circle sweep; for any n >= 1 it uses the first two sphere
    coordinates."""
    th = 2.0 * np.pi * np.arange(m) / m
    vals = np.zeros((m, space.n + 1))
    vals[:, 0] = np.cos(th)
    vals[:, 1] = np.sin(th)
    return LoopSpec(space, vals)


def sweep_loop(space, m=32, speed=0.6):
    """Loop tracing a great circle at constant |speed| < 1 (out and back on
    a closed profile when speed*2pi is not a multiple of 2pi would tear, so
    this sweeps a full circle at integer winding only when speed == 1; for
    testing we use the out-and-back profile)."""
    th = 2.0 * np.pi * np.arange(m) / m
    half = np.where(th <= np.pi, th, 2 * np.pi - th)
    ang = speed * half
    vals = np.zeros((m, space.n + 1))
    vals[:, 0] = np.cos(ang)
    vals[:, 1] = np.sin(ang)
    return LoopSpec(space, vals)


def isometric_arc_loop(space, m=48, arc=np.pi):
    """1-Lipschitz loop running at speed exactly 1 on [0, arc] and returning
    at constant speed < 1 on the rest of the circle."""
    th = 2.0 * np.pi * np.arange(m) / m
    out = np.minimum(th, arc)
    back = np.maximum(th - arc, 0.0) * (arc / (2 * np.pi - arc))
    ang = out - back
    vals = np.zeros((m, space.n + 1))
    vals[:, 0] = np.cos(ang)
    vals[:, 1] = np.sin(ang)
    return LoopSpec(space, vals)


def random_contracting_loop(space, rng, m=24, target=0.7, modes=3):
    """Random smooth strictly contracting loop, scaled to a target Lipschitz
    constant below 1."""
    n1 = space.n + 1
    base = sphere.project_to_sphere(rng.standard_normal(n1))
    tb = sphere.tangent_basis(base)
    th = 2.0 * np.pi * np.arange(m) / m
    tangent = np.zeros((m, space.n))
    for k in range(1, modes + 1):
        a = rng.standard_normal(space.n) / k
        b = rng.standard_normal(space.n) / k
        tangent += np.outer(np.cos(k * th), a) + np.outer(np.sin(k * th), b)
    vals = sphere.exp_map(base, tangent @ tb)
    loop = LoopSpec(space, sphere.project_to_sphere(vals))
    lg, _ = lipschitz_profile(loop)
    if lg > 1e-12:
        scale = target / lg
        vals = sphere.exp_map(base, scale * (tangent @ tb))
        loop = LoopSpec(space, sphere.project_to_sphere(vals))
        # rescaling in the tangent chart is only approximately Lipschitz-
        # linear; nudge down until strictly below the target band
        while lipschitz_profile(loop)[0] >= min(1.0, target * 1.2):
            scale *= 0.8
            vals = sphere.exp_map(base, scale * (tangent @ tb))
            loop = LoopSpec(space, sphere.project_to_sphere(vals))
    return loop


def geodesic_quadrature_distance(space, x, y, npts=4000):
    """Independent length oracle: integrate sqrt(q(gamma')) along the
    projective-line geodesic between two acausal quadric points."""
    s = np.linspace(0.0, 1.0, npts)
    c = (1 - s)[:, None] * x[None, :] + s[:, None] * y[None, :]
    qc = space.q(c)
    gam = c / np.sqrt(-qc)[:, None]
    dg = np.gradient(gam, s, axis=0)
    speed = np.sqrt(np.maximum(space.q(dg), 0.0))
    return np.trapezoid(speed, s)
