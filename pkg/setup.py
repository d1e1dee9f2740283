"""Build the Cython kernels when Cython is available; otherwise the package
falls back to its numpy implementation at import time."""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("QDCAVITY_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext = Extension(
            "qdcavity._kernels",
            ["src/qdcavity/_kernels.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
        )
        ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
