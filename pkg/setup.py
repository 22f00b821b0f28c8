#!/usr/bin/env python3
from setuptools import setup, find_packages

setup(
    name="selective-zsc",
    version="0.1.0",
    description="Selective zero-shot classification with augmented defined and residual attributes",
    packages=find_packages(include=["selective_zsc", "selective_zsc.*"]),
    install_requires=[
        "numpy>=1.24",
        "pandas>=2.0",
        "pydantic>=2.0.0",
        "pydantic-settings>=2.0",
        "python-dotenv>=1.0",
        "tenacity>=8.0",
        "click>=8.0,<8.2",
        "rich>=13.0",
        "matplotlib>=3.7",
    ],
    extras_require={
        "test": ["pytest>=8.0", "pytest-mock>=3.10"],
    },
    entry_points={
        "console_scripts": ["szsc=selective_zsc.cli:main"],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
    python_requires=">=3.9",
)
