"""Build the optional compiled kernel extension.

The package works without it (a pure-Python fallback is selected at import),
so a failed compile only costs speed.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/windpath/kernels/_core.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    print("Cython not available; building without the compiled kernels",
          file=sys.stderr)

setup(ext_modules=ext_modules)
