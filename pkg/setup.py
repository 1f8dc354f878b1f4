"""Build script for the optional compiled kernels.

The package works without the extension: depctl.kernels falls back to the
numpy implementation when `depctl._ext` is absent (or when
DEPCTL_PURE_PYTHON=1 is set).
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "depctl._ext",
        ["src/depctl/_ext.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(extensions, language_level=3) if cythonize else [],
)
