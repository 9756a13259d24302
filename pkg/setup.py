"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-Python fallback is
selected at import time), so a missing compiler or Cython must not
break installation.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class _OptionalBuildExt(build_ext):
    """Swallow compiler failures; the package falls back to pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            print(f"warning: compiled kernels skipped ({exc}); "
                  "using the pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: building {ext.name} failed ({exc}); "
                  "using the pure-Python fallback")


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [
            Extension(
                "warpalign._kernels._core",
                sources=["src/warpalign/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )


setup(ext_modules=_extensions(), cmdclass={"build_ext": _OptionalBuildExt})
