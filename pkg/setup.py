"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-numpy backend is selected
at import time); building it just makes the hot per-frequency kernels much
faster. ``pip install -e . --no-build-isolation`` compiles it when Cython
and a C compiler are available.
"""

import numpy as np
from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "lifichan._kernels._core",
                sources=["src/lifichan/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
