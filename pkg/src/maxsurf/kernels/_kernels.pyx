# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: triangle area/gradient assembly and pairwise scans.

Mirrors kernels/py_fallback.py; keep both in sync.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, sqrt

cnp.import_array()


def tri_area_grad(cnp.ndarray[cnp.float64_t, ndim=2] coords,
                  cnp.ndarray[cnp.int64_t, ndim=2] tris,
                  int pos_dims=2):
    cdef Py_ssize_t n_tri = tris.shape[0]
    cdef Py_ssize_t dim = coords.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] grad = np.zeros_like(coords)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] e1 = np.empty(dim)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] e2 = np.empty(dim)
    cdef double[:, :] c = coords
    cdef double[:, :] g = grad
    cdef double[:] ee1 = e1
    cdef double[:] ee2 = e2
    cdef long[:, :] t = tris
    cdef Py_ssize_t a, b, cc, k, it
    cdef double s, g11, g12, g22, det, tr, disc, lam, guard, area
    cdef double root, inv, cj, ck, gjk, gkk

    guard = INFINITY
    area = 0.0
    for it in range(n_tri):
        a = t[it, 0]
        b = t[it, 1]
        cc = t[it, 2]
        g11 = 0.0
        g12 = 0.0
        g22 = 0.0
        for k in range(dim):
            s = 1.0 if k < pos_dims else -1.0
            ee1[k] = c[b, k] - c[a, k]
            ee2[k] = c[cc, k] - c[a, k]
            g11 += s * ee1[k] * ee1[k]
            g12 += s * ee1[k] * ee2[k]
            g22 += s * ee2[k] * ee2[k]
        det = g11 * g22 - g12 * g12
        tr = g11 + g22
        disc = tr * tr - 4.0 * det
        if disc < 0.0:
            disc = 0.0
        lam = 0.5 * (tr - sqrt(disc))
        if tr > 0.0:
            if lam / tr < guard:
                guard = lam / tr
        else:
            guard = -INFINITY
        if det > 0.0:
            root = sqrt(det)
            area += 0.5 * root
            inv = 0.25 / root
        else:
            inv = 0.0
        for k in range(dim):
            s = 1.0 if k < pos_dims else -1.0
            cj = 2.0 * inv * s * (g22 * ee1[k] - g12 * ee2[k])
            ck = 2.0 * inv * s * (g11 * ee2[k] - g12 * ee1[k])
            g[b, k] += cj
            g[cc, k] += ck
            g[a, k] -= cj + ck
    if n_tri == 0:
        guard = INFINITY
    return area, grad, guard


def tri_grams(cnp.ndarray[cnp.float64_t, ndim=2] coords,
              cnp.ndarray[cnp.int64_t, ndim=2] tris,
              int pos_dims=2):
    cdef Py_ssize_t n_tri = tris.shape[0]
    cdef Py_ssize_t dim = coords.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] g11 = np.empty(n_tri)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] g12 = np.empty(n_tri)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] g22 = np.empty(n_tri)
    cdef double[:, :] c = coords
    cdef long[:, :] t = tris
    cdef double[:] a11 = g11
    cdef double[:] a12 = g12
    cdef double[:] a22 = g22
    cdef Py_ssize_t it, k, a, b, cc
    cdef double s, e1k, e2k, s11, s12, s22
    for it in range(n_tri):
        a = t[it, 0]
        b = t[it, 1]
        cc = t[it, 2]
        s11 = 0.0
        s12 = 0.0
        s22 = 0.0
        for k in range(dim):
            s = 1.0 if k < pos_dims else -1.0
            e1k = c[b, k] - c[a, k]
            e2k = c[cc, k] - c[a, k]
            s11 += s * e1k * e1k
            s12 += s * e1k * e2k
            s22 += s * e2k * e2k
        a11[it] = s11
        a12[it] = s12
        a22[it] = s22
    return g11, g12, g22


def pairwise_max_pairing(cnp.ndarray[cnp.float64_t, ndim=2] x,
                         cnp.ndarray[cnp.float64_t, ndim=2] y,
                         int pos_dims=2,
                         bint skip_diagonal=False):
    cdef Py_ssize_t nx = x.shape[0]
    cdef Py_ssize_t ny = y.shape[0]
    cdef Py_ssize_t dim = x.shape[1]
    cdef double[:, :] xv = x
    cdef double[:, :] yv = y
    cdef Py_ssize_t i, j, k
    cdef double best = -INFINITY
    cdef double acc, s
    cdef Py_ssize_t bi = -1, bj = -1
    for i in range(nx):
        for j in range(ny):
            if skip_diagonal and i == j:
                continue
            acc = 0.0
            for k in range(dim):
                s = 1.0 if k < pos_dims else -1.0
                acc += s * xv[i, k] * yv[j, k]
            if acc > best:
                best = acc
                bi = i
                bj = j
    return best, bi, bj
