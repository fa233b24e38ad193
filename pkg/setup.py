"""Build script: compiles the optional convolution extension core.

The package is fully functional without the extension (a NumPy fallback is
selected at import time), so any failure to compile degrades gracefully to
a pure-Python install instead of aborting.
"""

import sys

from setuptools import setup


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        print(f"mdrep: skipping compiled kernels ({exc})", file=sys.stderr)
        return []
    ext = Extension(
        "mdrep.kernels._convcore",
        sources=["src/mdrep/kernels/_convcore.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


class _OptionalBuildExt:
    """Factory returning a build_ext that tolerates compiler failures."""

    def __new__(cls):
        from setuptools.command.build_ext import build_ext

        class optional_build_ext(build_ext):
            def run(self):
                try:
                    super().run()
                except Exception as exc:
                    print(f"mdrep: compiled kernels unavailable ({exc}); "
                          "falling back to NumPy implementation", file=sys.stderr)

            def build_extension(self, ext):
                try:
                    super().build_extension(ext)
                except Exception as exc:
                    print(f"mdrep: failed to build {ext.name} ({exc}); "
                          "falling back to NumPy implementation", file=sys.stderr)

        return optional_build_ext


setup(ext_modules=_extensions(), cmdclass={"build_ext": _OptionalBuildExt()})
