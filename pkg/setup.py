from setuptools import find_packages, setup

setup(
    name="entanglement-designs",
    version="0.1.0",
    description="Entanglement criteria built from SIC POVMs and quantum 2-designs.",
    long_description=open("README.md", encoding="utf-8").read(),
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "examples", "examples.*"]),
    install_requires=[
        "numpy",
        "pandas",
        "pydantic>=2",
        "scipy",
        "toml",
        "tqdm",
    ],
    extras_require={"dev": ["black", "pytest"]},  # Formatter and test runner
    entry_points={
        "console_scripts": [
            "entdesign=entdesign.cli_app:main",
        ],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    keywords="quantum, entanglement, sic-povm, 2-design, separability",
    python_requires=">=3.9, <=3.12",
)
