import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("KERRPOL_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension(
                "kerrpol._em_core",
                ["src/kerrpol/_em_core.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # build the pure-Python package; the fallback kernel takes over
        ext_modules = []

setup(ext_modules=ext_modules)
