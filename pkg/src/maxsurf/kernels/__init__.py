"""Hot-kernel backend selection.

The compiled Cython extension is preferred; the pure-numpy fallback is used
when the extension is missing or when MAXSURF_FORCE_PYTHON is set to a
non-empty value. Both expose the same functions with identical contracts.
"""

import os

import numpy as np

from . import py_fallback

if os.environ.get("MAXSURF_FORCE_PYTHON"):
    _impl = py_fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = py_fallback
        BACKEND = "python"


def tri_area_grad(coords, tris, pos_dims=2):
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    tris = np.ascontiguousarray(tris, dtype=np.int64)
    return _impl.tri_area_grad(coords, tris, pos_dims)


def tri_grams(coords, tris, pos_dims=2):
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    tris = np.ascontiguousarray(tris, dtype=np.int64)
    return _impl.tri_grams(coords, tris, pos_dims)


def pairwise_max_pairing(x, y, pos_dims=2, skip_diagonal=False):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return _impl.pairwise_max_pairing(x, y, pos_dims, skip_diagonal)
