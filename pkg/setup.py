"""Build script: compiles the hot decode kernels as a C extension.

The package works without the extension (a pure-numpy fallback is selected
at import time), so extension build failures are non-fatal by design: run
``pip install -e . --no-build-isolation`` and check ``stbcsim bench`` to see
which backend is active.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "stbcsim._kernels",
                ["src/stbcsim/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
