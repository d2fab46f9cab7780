"""Build script for the optional compiled betweenness kernel.

The package is fully functional without the extension: streetrisk._kernels
falls back to the pure-Python implementation when the compiled module is
missing.  No -ffast-math: kernel results must be bit-identical to the
pure-Python path.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "streetrisk._kernels._brandes",
                ["src/streetrisk/_kernels/_brandes.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
