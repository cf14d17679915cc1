"""Build the optional Cython kernels; fall back to pure Python if that fails."""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("scalelab._ckernels", ["src/scalelab/_ckernels.pyx"],
                   include_dirs=[np.get_include()], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:
            print(f"warning: compiled kernels not built ({exc}); using pure Python", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); using pure Python", file=sys.stderr)


setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
