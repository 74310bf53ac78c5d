"""Build hook for the optional Cython occupancy kernel.

The package works without the extension: ramp.queuesim falls back to the
pure-Python kernel when the compiled module is absent (or when
RAMP_PURE_PYTHON=1 is set).
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ramp.queuesim._occupancy_cy",
                ["src/ramp/queuesim/_occupancy_cy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython at build time: ship pure Python only.
    pass

setup(ext_modules=ext_modules)
