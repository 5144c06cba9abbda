from setuptools import Extension, setup

# The compiled kernel is optional: safeline._kernels falls back to the pure
# Python implementation when the extension is unavailable.
ext_modules = []
try:
    from Cython.Build import cythonize

    ext = Extension(
        "safeline._kernels._fast",
        ["src/safeline/_kernels/_fast.pyx"],
        optional=True,
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
except ImportError:
    pass

setup(ext_modules=ext_modules)
