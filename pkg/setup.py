"""Build script for the optional compiled keystream kernel.

The package works without the extension (a pure-Python kernel is selected
at import time); building it just makes cipher payload handling fast.
-ffp-contract=off keeps the compiled iterates bit-identical to the
pure-Python path, which evaluates the same IEEE-754 double expressions.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "fedchaos._chaoskernel",
                ["src/fedchaos/_chaoskernel.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
