"""Build script for the optional compiled pinball-loss kernel.

The package is fully functional without the extension: a NumPy implementation
of the same kernel is selected at import time when the compiled module is
absent. Set BASISRISK_PURE_PYTHON=1 to skip compilation entirely, or run

    python setup.py build_ext --inplace

to build the extension in a source checkout.
"""

import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible; fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any toolchain failure is fine
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"warning: compiled kernel skipped ({exc!r}); "
            "basisrisk will use the NumPy fallback",
            file=sys.stderr,
        )


ext_modules = []
cmdclass = {}
if not os.environ.get("BASISRISK_PURE_PYTHON"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "basisrisk._kernels._pinball_cy",
                    ["src/basisrisk/_kernels/_pinball_cy.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
        cmdclass["build_ext"] = OptionalBuildExt
    except ImportError as exc:
        OptionalBuildExt._warn(exc)

setup(ext_modules=ext_modules, cmdclass=cmdclass)
