from setuptools import find_packages, setup

setup(
    name="bell-geometry",
    version="1.0.0",
    description="CGLMP Bell-inequality maximization and magic-simplex entanglement geometry for bipartite qudits",
    license="MIT",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    package_data={"bell_geometry": ["config/*.yaml", "config/jobs/*.yaml"]},
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "pandas>=2.0.0",
        "PyYAML>=6.0",
        "loguru>=0.7.0",
        "tomli>=2.0.0; python_version < '3.11'",
    ],
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "black>=23.0.0",
            "isort>=5.12.0",
            "flake8>=6.0.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "bell-geometry=bell_geometry.app:main",
        ],
    },
)
