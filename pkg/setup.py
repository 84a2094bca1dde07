"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (pure-numpy fallback in
``impulsectrl._kernels_py``), so a failed compile only emits a warning.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """build_ext that degrades to the pure-Python kernels on any failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            warnings.warn(f"compiled kernels skipped ({exc}); pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernels skipped ({exc}); pure-Python fallback will be used")


def _extensions():
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "impulsectrl._kernels_c",
        sources=["src/impulsectrl/_kernels_c.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": 3, "embedsignature": True})


setup(cmdclass={"build_ext": OptionalBuildExt}, ext_modules=_extensions())
