import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # The package works without the compiled kernels; ccobft.kernels falls
    # back to the numpy implementation at import time.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "ccobft.kernels._speedups",
                ["src/ccobft/kernels/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
