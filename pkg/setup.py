"""Build hook for the optional Cython kernel extension.

The package works without the extension (numpy fallback); building it
just makes the integer layer kernels faster.  Typed memoryviews only,
so no numpy C headers are needed.
"""

from Cython.Build import cythonize
from setuptools import Extension, setup

setup(
    ext_modules=cythonize(
        [
            Extension(
                "srcsim._kernels_cy",
                ["src/srcsim/_kernels_cy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
)
