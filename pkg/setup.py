# -*- coding:utf-8 -*-
# /usr/bin/env python
"""
Date: 2026/9/27 16:00
Desc: BipedTools 的 PYPI 基本信息文件
"""

import re
import ast

import setuptools


with open("README.md", "r", encoding="utf-8") as f:
    long_description = f.read()


def get_version_string() -> str:
    """
    get the bipedtools version
    :return: version
    :rtype: str
    """
    with open("bipedtools/__init__.py", "rb") as file:
        version_line = re.search(
            pattern=r"__version__\s+=\s+(.*)", string=file.read().decode("utf-8")
        ).group(1)
        return str(ast.literal_eval(version_line))


setuptools.setup(
    name="bipedtools",
    version=get_version_string(),
    author="BipedTools Developers",
    license="MIT",
    description="BipedTools is a numerical toolkit for the passive compass-gait walker!",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["tests", "tests.*"]),
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "pandas>=2.0",
        "typer[standard]>=0.9.0",
        "pydantic>=2.0",
        "pydantic-settings>=2.0",
        "python-dotenv>=0.21.0",
        "cachetools>=5.0.0",
    ],
    entry_points={"console_scripts": ["bipedtools=bipedtools.__main__:main"]},
    keywords=[
        "biped",
        "passive walking",
        "compass gait",
        "poincare map",
        "bifurcation",
        "melnikov",
        "continuation",
        "floquet",
        "hybrid system",
    ],
    classifiers=[
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Programming Language :: Python :: 3.13",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.10",
)
