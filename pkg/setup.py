import os

from setuptools import setup, find_packages

here = os.path.abspath(os.path.dirname(__file__))

with open(os.path.join(here, "README.md"), encoding="utf-8") as f:
    long_description = f.read()

with open(os.path.join(here, "VERSION"), encoding="utf-8") as f:
    __version__ = f.read().strip()
    with open(os.path.join(here, "extremal", "version.py"), "w+", encoding="utf-8") as v:
        v.write("# CHANGES HERE HAVE NO EFFECT: ../VERSION is the source of truth\n")
        v.write(f'__version__ = "{__version__}"\n')

setup(
    name="extremal",
    description="Heavy-tailed linear processes, tail cross-correlation and long-memory diagnostics.",
    packages=find_packages(exclude=["tests"]),
    package_data={"extremal": ["resources/*"]},
    include_package_data=True,
    version=__version__,
    license="MIT",
    long_description=long_description,
    long_description_content_type="text/markdown",
    install_requires=[
        "pyfunctional>=1.2.0",
        "jsonschema>=2.6.0",
        "numpy>=1.20",
        "scipy>=1.6",
        "pandas>=1.5",
    ],
    entry_points={"console_scripts": ["extremal = extremal.cli:main"]},
    python_requires=">=3.8",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Typing :: Typed",
    ],
)
