"""Build script for the compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time); building it just makes ensemble simulation several times
faster.  Build in place with:

    python setup.py build_ext --inplace
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "collapsesim.backends._kernels",
        ["src/collapsesim/backends/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
)
