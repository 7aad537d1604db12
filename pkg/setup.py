import os

from setuptools import setup

ext_modules = []
if not os.environ.get("BOATLAND_SKIP_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            "src/boatland/kernels/_native.pyx",
            language_level="3",
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
        for ext in ext_modules:
            ext.include_dirs.append(np.get_include())
            ext.extra_compile_args = ["-O3"]
    except ImportError:
        # no Cython at build time: install pure, the package falls back to the
        # numpy backend at import
        ext_modules = []

setup(ext_modules=ext_modules)
