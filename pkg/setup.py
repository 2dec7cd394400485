from setuptools import setup, find_packages

setup(
    name="hierax",
    version="0.1.0",
    description="Hierarchical reasoning, symbol elimination and interpolation in local theory extensions.",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    author="Shane Vigil",
    author_email="savigil@gmail.com",
    license="MIT",
    packages=find_packages(include=["hierax", "hierax.*"]),
    python_requires=">=3.8",
    install_requires=[
        "jsonschema==4.23.0",
        "rapidfuzz==3.11.0",
    ],
    extras_require={
        "testing": [
            "pytest==8.3.4",
            "pytest-cov",
        ],
        "linting": ["flake8==7.1.1"],
        "documentation": [
            "Sphinx==7.4.7",
            "sphinx-rtd-theme==3.0.2",
        ],
    },
    entry_points={
        "console_scripts": [
            "hierax=hierax.cli:main",
        ],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    keywords="local theory extensions symbol elimination interpolation quantifier elimination",
)
