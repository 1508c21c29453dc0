import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; pcmrec falls back at import
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "pcmrec._kernels",
                ["src/pcmrec/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: the sparse product must match a naive loop bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
