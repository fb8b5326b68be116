from setuptools import setup, Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    # -ffp-contract=off keeps float arithmetic bit-identical to the numpy
    # fallback (no FMA contraction of a*b+c).
    extensions = cythonize(
        [
            Extension(
                "dermkit.imaging.kernels._cyimpl",
                ["src/dermkit/imaging/kernels/_cyimpl.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
