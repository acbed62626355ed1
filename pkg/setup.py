"""Build script: compiles the optional Cython jet-evaluation core.

The package is fully functional without the extension (a pure-Python
evaluator with identical semantics is selected at import time), so the
build degrades gracefully when Cython or a C compiler is unavailable.

-ffp-contract=off keeps the compiled kernels bit-identical to the pure
Python fallback: without it the compiler may fuse a*b+c into FMA
instructions, which round differently.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "algmech._jetc",
                sources=["src/algmech/_jetc.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
