import os

import numpy as np
from setuptools import Extension, setup


def _extensions():
    if os.environ.get("RESOLVENT_LAB_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "resolvent_lab._kernels",
        ["src/resolvent_lab/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
