from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; kernels fall back at import
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("snapstab._kernels", ["src/snapstab/_kernels.pyx"], extra_compile_args=["-O2"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
