import setuptools

setuptools.setup(
    name="overlayembed",
    version="0.1.0",
    author="Overlayembed developers",
    description="Graph embeddings in Euclidean, spherical, hyperbolic, product and overlaying spaces",
    long_description=open("README.rst").read(),
    packages=setuptools.find_packages(exclude=["tests", "tests.*"]),
    python_requires=">=3.9",
    install_requires=[
        'numpy',
        'scipy',
        'pandas',
        'tabulate',
        'pyyaml'
    ],
    entry_points={
        'console_scripts': ['overlayembed = overlayembed.cli.main:main'],
    },
    classifiers=[
        "Development Status :: 2 - Pre-Alpha",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3.9",
    ],
)
