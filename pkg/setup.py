"""Build the optional Cython kernels; the package works without them."""

import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("NEHARI_FLOW_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "nehari_flow._ckernels",
        ["src/nehari_flow/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions())
