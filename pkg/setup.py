"""Build script for the optional compiled histogram kernels.

The package is fully functional without the extension; gamc.gbt.kernels
falls back to the pure-NumPy twin when the compiled module is missing.
Floating-point contraction is disabled so both backends stay bitwise
identical.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "gamc.gbt._kernels_c",
        ["src/gamc/gbt/_kernels_c.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
