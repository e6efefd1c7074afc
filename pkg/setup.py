"""Build script for the optional compiled kernels.

The package is fully functional without the extension: ``centile._kernels``
falls back to pure numpy implementations when the compiled module is not
importable. Marking the extension optional keeps installs working on hosts
without a C toolchain.
"""

import os

from setuptools import Extension, setup

_PYX = "src/centile/_kernels/_ckern.pyx"

ext_modules = []
if os.path.exists(_PYX):
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext = Extension(
            "centile._kernels._ckern",
            [_PYX],
            include_dirs=[numpy.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
        )
        ext.optional = True
        ext_modules = cythonize(
            [ext], compiler_directives={"language_level": "3"}
        )

setup(ext_modules=ext_modules)
