import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "maxsurf.kernels._kernels",
                ["src/maxsurf/kernels/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    # The package falls back to the pure-numpy kernels at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
