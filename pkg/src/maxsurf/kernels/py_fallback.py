"""Pure-numpy implementations of the hot kernels.

Same contracts as the compiled extension ``_kernels``; used when the
extension is unavailable or MAXSURF_FORCE_PYTHON is set.
"""

import numpy as np


def _metric_signs(dim, pos_dims):
    signs = -np.ones(dim)
    signs[:pos_dims] = 1.0
    return signs


def tri_area_grad(coords, tris, pos_dims=2):
    """Total triangle area, its gradient in the ambient coordinates, and the
    worst spacelikeness ratio.

    coords : (N, d) float64 node positions
    tris   : (T, 3) int32/int64 oriented triangles
    pos_dims : number of leading +1 coordinates of the quadratic form

    Returns (area, grad, guard) where grad is (N, d) and guard is the
    minimum over triangles of lambda_min(Gram) / trace(Gram); guard <= 0
    means some triangle is not spacelike and area is then unreliable.
    """
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    signs = _metric_signs(coords.shape[1], pos_dims)

    p0 = coords[tris[:, 0]]
    e1 = coords[tris[:, 1]] - p0
    e2 = coords[tris[:, 2]] - p0
    qe1 = e1 * signs
    qe2 = e2 * signs
    g11 = np.einsum("ij,ij->i", e1, qe1)
    g12 = np.einsum("ij,ij->i", e1, qe2)
    g22 = np.einsum("ij,ij->i", e2, qe2)

    det = g11 * g22 - g12 * g12
    tr = g11 + g22
    disc = np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0))
    lam_min = 0.5 * (tr - disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(tr > 0.0, lam_min / tr, -np.inf)
    guard = float(ratios.min()) if len(tris) else np.inf

    root = np.sqrt(np.maximum(det, 0.0))
    area = 0.5 * float(root.sum())

    # d(area_T)/dx via d sqrt(det)/d g and dg/dx.
    inv = np.zeros_like(root)
    good = root > 0.0
    inv[good] = 0.25 / root[good]
    gj = (inv * g22)[:, None] * qe1 - (inv * g12)[:, None] * qe2
    gk = (inv * g11)[:, None] * qe2 - (inv * g12)[:, None] * qe1
    gj *= 2.0
    gk *= 2.0

    grad = np.zeros_like(coords)
    np.add.at(grad, tris[:, 1], gj)
    np.add.at(grad, tris[:, 2], gk)
    np.add.at(grad, tris[:, 0], -gj - gk)
    return area, grad, guard


def tri_grams(coords, tris, pos_dims=2):
    """Per-triangle 2x2 Gram entries (g11, g12, g22) of the edge vectors."""
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    signs = _metric_signs(coords.shape[1], pos_dims)
    p0 = coords[tris[:, 0]]
    e1 = coords[tris[:, 1]] - p0
    e2 = coords[tris[:, 2]] - p0
    qe2 = e2 * signs
    g11 = np.einsum("ij,ij->i", e1, e1 * signs)
    g12 = np.einsum("ij,ij->i", e1, qe2)
    g22 = np.einsum("ij,ij->i", e2, qe2)
    return g11, g12, g22


def pairwise_max_pairing(x, y, pos_dims=2, skip_diagonal=False):
    """Maximum of <x_i, y_j> over all pairs, with the attaining indices.

    skip_diagonal excludes i == j (for scanning one node set against itself).
    Returns (value, i, j).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    signs = _metric_signs(x.shape[1], pos_dims)
    best = -np.inf
    bi = bj = -1
    step = max(1, int(2e7) // max(1, y.shape[0]))
    ys = (y * signs).T
    for lo in range(0, x.shape[0], step):
        hi = min(lo + step, x.shape[0])
        block = x[lo:hi] @ ys
        if skip_diagonal:
            idx = np.arange(lo, hi)
            keep = idx < y.shape[0]
            block[np.arange(hi - lo)[keep], idx[keep]] = -np.inf
        k = int(np.argmax(block))
        i, j = divmod(k, y.shape[0])
        if block[i, j] > best:
            best = float(block[i, j])
            bi, bj = lo + i, j
    return best, bi, bj
