import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; kernels fall back to numpy
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("SIGNSYNTH_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "signsynth._kernels",
                ["src/signsynth/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: compiled and numpy kernels must agree bit for bit
                extra_compile_args=["-O2", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
