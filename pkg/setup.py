import setuptools

tests_require = [
    "pytest>=6.1.1,<9",
    "coverage>=5.3",
    "pytest-cov>=2.10.1",
    "pytest-cases>=3.6.9",
    "hypothesis>=6.0",
]

setuptools.setup(
    name="metropolis-ustcon",
    version="0.1.0",
    description="Metropolis-Hastings walks for undirected s-t connectivity.",
    packages=setuptools.find_packages(exclude=["tests"]),
    python_requires=">=3.9",
    install_requires=["numpy>=1.20", "pandas>=1.5", "scipy>=1.6"],
    tests_require=tests_require,
    extras_require={"test": tests_require},
    entry_points={
        "console_scripts": ["metropolis-ustcon=metropolis_ustcon.cli:main"]
    },
)
