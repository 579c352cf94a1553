#!/usr/bin/env python3
"""
Setup script for adpersuasion

Installs the package and its ``adpersuasion`` console command.
"""
from setuptools import find_packages, setup


def read_requirements(path):
    """Requirement lines of a requirements file, comments dropped."""
    with open(path, encoding='utf-8') as f:
        return [line.strip() for line in f if line.strip() and not line.startswith('#')]


setup(
    name='adpersuasion',
    version='0.1.0',
    description='Bayesian persuasion signaling for transparent second-price ad auctions',
    packages=find_packages(include=['adpersuasion', 'adpersuasion.*']),
    python_requires='>=3.8',
    install_requires=read_requirements('requirements.txt'),
    extras_require={'test': read_requirements('requirements-test.txt')},
    entry_points={'console_scripts': ['adpersuasion=adpersuasion.cli:main']},
)
