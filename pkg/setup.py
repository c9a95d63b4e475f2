"""Build hook for the compiled numeric core.

The package works without the extension (a numpy fallback is selected at
import time), so failure to build the Cython module is deliberately
non-fatal: we fall back to a pure-python wheel.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "thzuav._kernels._core",
                ["src/thzuav/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
