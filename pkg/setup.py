"""Build script adding the optional compiled integrator core.

The package is pure Python except for ``caffeine._engine``, a Cython
translation of the inner simulation loop in ``caffeine._engine_py``. If
Cython or a C compiler is unavailable the build falls back to the pure
module; ``caffeine.dynamics`` selects whichever is importable at runtime.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/caffeine/_engine.pyx"],
        language_level=3,
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    for ext in ext_modules:
        # Keep sin/cos as the same scalar libm calls the pure-Python twin
        # makes; the fused sincos entry point can differ by an ulp, which
        # breaks bit-identical rollouts between the two backends.
        ext.extra_compile_args = [
            "-fno-builtin-sin", "-fno-builtin-cos", "-fno-builtin-sincos",
        ]
except ImportError:
    pass

setup(ext_modules=ext_modules)
