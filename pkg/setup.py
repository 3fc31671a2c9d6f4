#!/usr/bin/env python3

from setuptools import find_packages, setup

setup(
    name="mfdepth",
    version="0.1.1",
    license="MIT License",
    description=(
        "mfdepth: global and local multivariate functional depths, outlier detection and boxplots for irregularly "
        "observed multivariate functional data"
    ),
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    python_requires=">=3.8",
    install_requires=[
        "numpy >= 1.22",
        "scipy >= 1.10",
        "matplotlib >= 3.5",
        "zstandard >= 0.21.0",
        'tomli >= 1.1.0; python_version < "3.11"',
    ],
    tests_require=["coverage", "flake8", "wheel", "hypothesis", "jsonschema"],
    extras_require={
        "test": ["coverage", "flake8", "wheel", "hypothesis", "jsonschema"],
    },
    packages=find_packages(exclude=["test"]),
    package_data={"mfdepth": ["schemas/*.json"]},
    entry_points={
        "console_scripts": ["mfdepth=mfdepth.cli:cli"],
    },
    platforms=["MacOS X", "Posix"],
    include_package_data=True,
    test_suite="test",
    classifiers=[
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: MacOS :: MacOS X",
        "Operating System :: POSIX",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
