import os

import numpy as np
from setuptools import Extension, setup


def build_ext_modules():
    # the package imports and runs without the compiled core
    if os.environ.get("POISBIN_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except Exception:
        return []
    ext = Extension(
        name="poisbin._ckernels",
        sources=[os.path.join("src", "poisbin", "_ckernels.pyx")],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=build_ext_modules())
