from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; molfrag._pykernels is used
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "molfrag._ckernels",
                ["src/molfrag/_ckernels.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
