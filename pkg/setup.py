"""Build script.

The compiled kernel extension is optional: when Cython (and a C compiler)
are available the hot assembly loops are built as ``frachs._ckern``;
otherwise the package installs with the pure-numpy fallback only and
``frachs.backend`` selects it at import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "frachs._ckern",
                ["src/frachs/_ckern.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
