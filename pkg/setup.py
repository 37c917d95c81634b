import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "symsync._kernel",
        ["src/symsync/_kernel.pyx"],
        include_dirs=[np.get_include()],
        # no fast-math or FMA contraction: results must match the Python kernel bit for bit
        extra_compile_args=["-O3", "-ffp-contract=off", "-fno-fast-math"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
