"""Optional compiled-kernel build.

The package runs fine as pure Python; this only adds the fast text-scan
extension. Build in place with:

    python setup.py build_ext --inplace

Requires Cython and a C compiler. When either is missing the extension is
skipped and the pure fallback is used at import.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/flameward/textmetrics/_scan.pyx"],
        compiler_directives={"language_level": 3},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
