"""Build hook for the optional compiled kernel.

The package works without the extension (a pure-Python fallback is
selected at import time), so a failed compile downgrades to a warning
instead of aborting the install.
"""

import sys

from setuptools import Extension, setup

extensions = []
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "btrnglab._ckernel",
                ["src/btrnglab/_ckernel.pyx"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    sys.stderr.write("warning: compiled kernel skipped (%s)\n" % exc)

setup(ext_modules=extensions)
