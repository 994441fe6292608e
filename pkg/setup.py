"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension: layersim.backend
falls back to the pure-numpy implementation when the compiled module is
missing, so a failed extension build only costs speed.
"""

from setuptools import Extension, setup


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "layersim._fastops",
        sources=["src/layersim/_fastops.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions())
