"""Small helpers for round-sphere geometry on unit vectors of R^(n+1)."""

import numpy as np


def distance(a, b):
    """Great-circle distance between unit vectors; broadcasts.

    Uses atan2 of the tangential rejection against the cosine, which stays
    accurate near coincident and near antipodal pairs.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.clip((a * b).sum(axis=-1), -1.0, 1.0)
    rej = a - c[..., None] * b
    return np.arctan2(np.linalg.norm(rej, axis=-1), c)


def slerp(a, b, t):
    """Geodesic interpolation from a to b at fraction t in [0, 1]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ang = distance(a, b)
    if np.ndim(ang) == 0:
        if ang < 1e-14:
            return a.copy()
        s = np.sin(ang)
        return (np.sin((1.0 - t) * ang) * a + np.sin(t * ang) * b) / s
    s = np.sin(np.where(ang < 1e-14, 1.0, ang))
    out = (
        np.sin((1.0 - t) * ang)[..., None] * a + np.sin(t * ang)[..., None] * b
    ) / s[..., None]
    return np.where(ang[..., None] < 1e-14, a, out)


def exp_map(base, tangent):
    """Geodesic exponential at ``base``; tangent must satisfy <base, t> = 0."""
    base = np.asarray(base, dtype=float)
    tangent = np.asarray(tangent, dtype=float)
    norm = np.linalg.norm(tangent, axis=-1)
    safe = np.where(norm < 1e-300, 1.0, norm)
    out = np.cos(norm)[..., None] * base + np.sin(norm)[..., None] * (
        tangent / safe[..., None]
    )
    return np.where(norm[..., None] < 1e-300, np.broadcast_to(base, out.shape), out)


def log_map(base, target):
    """Inverse of exp_map; target must not be antipodal to base."""
    base = np.asarray(base, dtype=float)
    target = np.asarray(target, dtype=float)
    ang = distance(base, target)
    rej = target - np.clip((base * target).sum(axis=-1), -1, 1)[..., None] * base
    norm = np.linalg.norm(rej, axis=-1)
    safe = np.where(norm < 1e-300, 1.0, norm)
    out = (ang / safe)[..., None] * rej
    return np.where(ang[..., None] < 1e-14, np.zeros_like(out), out)


def project_to_sphere(vectors):
    v = np.asarray(vectors, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def tangent_basis(base):
    """Deterministic orthonormal basis of the tangent space at ``base``."""
    base = np.asarray(base, dtype=float)
    n1 = base.shape[0]
    cols = np.eye(n1)
    basis = []
    for k in range(n1):
        c = cols[k] - np.dot(cols[k], base) * base
        for b in basis:
            c -= np.dot(c, b) * b
        nrm = np.linalg.norm(c)
        if nrm > 1e-8:
            basis.append(c / nrm)
        if len(basis) == n1 - 1:
            break
    return np.vstack(basis)
