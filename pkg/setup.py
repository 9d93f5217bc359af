# Builds the optional Cython kernel module. When Cython is missing or the
# compile fails, the package still installs and falls back to numpy kernels.
#
#   pip install -e . --no-build-isolation
#   python setup.py build_ext --inplace
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "phasediff._kernels",
                ["src/phasediff/_kernels.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
