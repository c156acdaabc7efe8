"""
Based on https://github.com/pypa/sampleproject

"""

# Always prefer setuptools over distutils
from setuptools import setup, find_packages
from os import path
from io import open

here = path.abspath(path.dirname(__file__))

# Get the long description from the README file
with open(path.join(here, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

setup(
    name='mgcodesign',
    version='0.4.0',
    python_requires='>=3.8.0',
    long_description=long_description,
    long_description_content_type='text/markdown',
    author='Bantam Tools',
    author_email='hello@bantamtools.com',
    description="Dissipativity-based control and topology co-design for DC microgrids",
    classifiers=[
        "Programming Language :: Python :: 3 :: Only",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Development Status :: 4 - Beta",
        "Natural Language :: English",
        "Intended Audience :: Science/Research",
    ],

    packages=find_packages(exclude=['contrib', 'docs', 'test', 'test.*']),
    package_data={'mgcodesign': ['data/*.ini']},
    install_requires=[
        'clarabel>=0.6.0',
        'cvxpy>=1.4',
        'mpmath>=1.3.0',
        'numpy>=1.22',
        'packaging>=21.0',
        'scipy>=1.8',
    ],
    extras_require={
        'dev': ['coverage'],
        'test': [],
    },
    entry_points={
        'console_scripts': ['mgcodesign=mgcodesign.cli:main'],
    },
)
