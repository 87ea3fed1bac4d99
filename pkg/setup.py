"""Build hook: compile the simulation kernels to C when Cython is available.

The package is fully functional without the extension; mecplan.sim falls
back to the pure-Python kernels at import time. `-ffp-contract=off` keeps
the compiled float arithmetic bit-identical to the interpreter's.
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
                "mecplan.sim._kernels_cy",
                ["src/mecplan/sim/_kernels_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
