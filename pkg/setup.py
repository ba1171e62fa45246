"""Builds the optional compiled BM25 kernel.

The package works without it; kennel.retrieval falls back to the pure-Python
kernel when the extension is absent. -ffp-contract=off keeps the compiled
kernel bit-identical to the Python one (no FMA contraction).
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "kennel.retrieval._bm25_cy",
                ["src/kennel/retrieval/_bm25_cy.pyx"],
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
