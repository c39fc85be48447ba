from setuptools import Extension, setup

# The compiled kernels are optional: if Cython (or a C compiler) is not
# available the package installs pure, and dfsup._backend falls back to the
# numpy implementations at import time.
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "dfsup._speedups",
                ["src/dfsup/_speedups.pyx"],
                # -ffp-contract=off keeps the scalar kernels bit-compatible
                # with the pure-Python reference (no FMA contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
