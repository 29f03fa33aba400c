# Builds the optional compiled kernels; the package works without them.
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DIELENS_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        # OpenMP threads the aperture sum; set DIELENS_NO_OPENMP=1 for compilers without it
        openmp = [] if os.environ.get("DIELENS_NO_OPENMP", "") == "1" else ["-fopenmp"]
        ext_modules = cythonize(
            [Extension("dielens._kernels_ext", ["src/dielens/_kernels_ext.pyx"],
                       include_dirs=[np.get_include()],
                       extra_compile_args=["-O3"] + openmp,
                       extra_link_args=openmp)],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
