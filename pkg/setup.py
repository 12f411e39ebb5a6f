from setuptools import setup, find_packages

# Setup configuration for the degen-lab package
setup(
    name="degen-lab",
    version="0.3.0",
    description="Numerical lab for elliptic problems with degenerate coercivity",
    author="Your Name",
    package_dir={"": "crates"},
    packages=find_packages(where="crates"),
    install_requires=[
        "click>=8.2",
        "pyyaml>=6.0.1",
        "numpy>=1.26",
        "scipy>=1.11",
    ],
    extras_require={
        "test": ["pytest>=7.4"],
    },
    entry_points={
        'console_scripts': [
            'degen=degen.cli:main',
        ],
    },
    python_requires=">=3.10",
)
