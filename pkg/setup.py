"""Build script for the optional compiled sparse kernels.

The package works without the extension (a numpy fallback is selected at
import time), so failure to cythonize or compile is deliberately non-fatal:
we build what we can and let the runtime pick the best available backend.
"""

import os

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    # -ffp-contract=off: no FMA contraction, so each multiply/add rounds as a
    # plain IEEE double and results stay independent of compiler fusion choices.
    flags = ["-O3", "-ffp-contract=off"]
    ext_modules = cythonize(
        [
            Extension(
                "asymgcn._kernels._sparse_cy",
                ["src/asymgcn/_kernels/_sparse_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=flags,
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - exercised only on broken toolchains
    if os.environ.get("ASYMGCN_REQUIRE_EXT"):
        raise
    print(f"asymgcn: skipping compiled kernels ({exc}); numpy fallback will be used")

setup(ext_modules=ext_modules)
