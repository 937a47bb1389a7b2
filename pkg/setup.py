"""Build the optional compiled grid kernel.

The package works without it (a numpy fallback is selected at import time);
building simply makes exhaustive finite-field sweeps faster.

    pip install -e . --no-build-isolation
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "erank._gridcy",
                sources=["src/erank/_gridcy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
