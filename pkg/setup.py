#!/usr/bin/env python3
"""
manifold-id 安装脚本

用于将 manifold_id 安装为可导入的 Python 包，并注册 manifold-id 命令。
"""

from setuptools import setup, find_packages
import os

# 读取 README 文件
def read_readme():
    readme_path = os.path.join(os.path.dirname(__file__), "docs", "README.md")
    if os.path.exists(readme_path):
        with open(readme_path, "r", encoding="utf-8") as f:
            return f.read()
    return "manifold-id - 地理嵌入的内在维度测量库"

setup(
    name="manifold-id",
    version="0.1.0",
    description="地理隐式神经表示嵌入的局部与全局内在维度测量",
    long_description=read_readme(),
    long_description_content_type="text/markdown",
    author="manifold-id contributors",
    author_email="",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: GIS",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.20",
        "scipy>=1.6",
        "pandas>=1.2",
        "PyYAML>=6.0",
    ],
    extras_require={
        "dev": [
            "pytest",
            "pytest-cov",
            "black",
            "flake8",
        ],
    },
    entry_points={
        "console_scripts": [
            "manifold-id=manifold_id.cli:main",
        ],
    },
    include_package_data=True,
    zip_safe=False,
)
