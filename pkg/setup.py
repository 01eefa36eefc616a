import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; kernels fall back at import
    cythonize = None

extensions = []
if cythonize is not None and not os.environ.get("IFOMSIM_NO_EXT"):
    extensions = cythonize(
        [
            Extension(
                "ifomsim._kernels._ckernels",
                ["src/ifomsim/_kernels/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                # keep float results identical to the pure-Python path
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=extensions)
