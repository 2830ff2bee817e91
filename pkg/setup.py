import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("JETVAR_NO_EXTENSION"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "jetvar._poly._speedups",
                    ["src/jetvar/_poly/_speedups.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # No Cython available: install with the pure-Python kernel only.
        ext_modules = []

setup(ext_modules=ext_modules)
