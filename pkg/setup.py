"""Build script: compiles the optional edit-distance extension.

The package works without the extension (a pure-Python kernel is selected
at import time), so a failed compile only costs speed, never correctness.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/dialogforge/_editdist.pyx",
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # Cython missing or no compiler: fall back to pure Python
    print(f"warning: skipping C extension build ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
