import os

import numpy as np
from setuptools import Extension, setup

# MOTIONAUTH_NO_EXT=1 skips the compiled core; the numpy fallback is used at runtime.
ext_modules = []
if not os.environ.get("MOTIONAUTH_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "motionauth.kernels._ckernels",
                    ["src/motionauth/kernels/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules)
