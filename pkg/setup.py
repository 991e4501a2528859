"""Build hook for the optional compiled kernels.

The package works without the extension: `citylens._kernels` falls back to
the pure-Python implementation at import time, so a failed native build only
costs speed, never functionality.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the native kernels if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing
            print(f"warning: skipping native kernels ({exc}); pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to compile {ext.name} ({exc}); pure-Python fallback will be used")


extensions = []
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "citylens._kernels._native",
                ["src/citylens/_kernels/_native.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    print("warning: Cython not available; native kernels will not be built")

setup(ext_modules=extensions, cmdclass={"build_ext": optional_build_ext})
