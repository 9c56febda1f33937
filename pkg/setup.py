"""Build script for the optional compiled simulation kernel.

The package works without the extension (a pure-Python kernel is selected at
import time); any failure to cythonize or compile downgrades to a warning so
`pip install` never hard-fails on toolchain gaps.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the kernel if we can, warn and continue if we cannot."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"WARNING: building the compiled kernel failed ({exc}); "
            "seglab will fall back to the pure-Python kernel",
            file=sys.stderr,
        )


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print(
            "WARNING: Cython not available; skipping the compiled kernel",
            file=sys.stderr,
        )
        return []
    return cythonize(
        [
            Extension(
                "seglab.engine._ckernel",
                ["src/seglab/engine/_ckernel.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
