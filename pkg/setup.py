import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "mvgames._kernel",
    ["src/mvgames/_kernel.pyx"],
    include_dirs=[numpy.get_include()],
    extra_compile_args=["-O3"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    optional=True,
)

setup(
    ext_modules=cythonize([ext], language_level=3, compiler_directives={"boundscheck": False, "wraparound": False, "cdivision": True}),
)
