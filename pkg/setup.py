"""Build the optional Cython kernels.

The package works without them; ``cutplate.kernels`` falls back to numpy.
Set ``CUTPLATE_NO_EXT=1`` to skip compilation.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("CUTPLATE_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "cutplate._kernels",
                    ["src/cutplate/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
