import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

NPY_RANDOM_LIB = os.path.join(np.get_include(), "..", "..", "random", "lib")

extensions = [
    Extension(
        "rdmelab._ckernels",
        ["src/rdmelab/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[NPY_RANDOM_LIB],
        libraries=["npyrandom", "m"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # no FMA contraction: the pure-Python fallback must reproduce results bit for bit
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

if os.environ.get("RDMELAB_NO_EXT"):
    extensions = []

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
)
