import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off: the numpy fallback must produce bit-identical split
# scores, so the compiler may not fuse multiply-adds in the kernel.
extensions = [
    Extension(
        "eduvuln.models._split_cy",
        ["src/eduvuln/models/_split_cy.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
