import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, find_packages, setup

extensions = [
    Extension(
        "framebridge._kernels._core",
        sources=["src/framebridge/_kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    ),
]

# name/layout duplicated from pyproject.toml so legacy setup.py code paths
# (old pip without PEP 660 support) still resolve the src layout
setup(
    name="framebridge",
    version="0.1.0",
    package_dir={"": "src"},
    packages=find_packages("src"),
    install_requires=["numpy>=1.24", "scipy>=1.10"],
    entry_points={"console_scripts": ["framebridge = framebridge.cli:main"]},
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    ),
)
