"""Build script: compiles the optional Cython fast path.

The package is fully functional without the extension; if Cython or a C
compiler is unavailable the build falls back to pure Python and
``redsim.backend`` reports ``python`` as the only backend.
"""

import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and os.path.exists("src/redsim/_speedups.pyx"):
    ext_modules = cythonize(
        [
            Extension(
                "redsim._speedups",
                ["src/redsim/_speedups.pyx"],
                # No -ffast-math / -march: the compiled core must produce
                # bit-identical IEEE doubles to the pure-Python engine.
                extra_compile_args=["-O2"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
