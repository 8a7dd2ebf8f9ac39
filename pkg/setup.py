import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

npy_random_lib = os.path.join(os.path.dirname(np.__file__), "random", "lib")

ext = Extension(
    "llr_lab._kernels",
    ["src/llr_lab/_kernels.pyx"],
    include_dirs=[np.get_include()],
    library_dirs=[npy_random_lib],
    libraries=["npyrandom", "m"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    extra_compile_args=["-O3"],
    # a failed compile leaves the pure-Python kernels in charge
    optional=True,
)

setup(ext_modules=cythonize([ext], compiler_directives={"language_level": "3"}))
