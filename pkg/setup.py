import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off: keep C arithmetic bit-identical to CPython (no fused
# multiply-add), so the compiled kernels and the pure-Python fallback agree
# float-for-float.
setup(
    ext_modules=cythonize(
        [
            Extension(
                "pursuitsim._kernels._gridcore",
                ["src/pursuitsim/_kernels/_gridcore.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
)
