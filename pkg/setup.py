"""
Setup script para py-morphgrasp.

Este script permite instalar el proyecto y crear el comando 'morphgrasp'
que estará disponible en el PATH del sistema.

Instalación en modo desarrollo:
    pip install -e .

Instalación normal:
    pip install .
"""

from pathlib import Path

from setuptools import find_packages, setup

# Leer el contenido del README
readme_file = Path(__file__).parent / "README.md"
long_description = readme_file.read_text(encoding="utf-8") if readme_file.exists() else ""

# Leer dependencias del requirements.txt
requirements_file = Path(__file__).parent / "requirements.txt"
requirements = []
if requirements_file.exists():
    with open(requirements_file, encoding="utf-8") as f:
        requirements = [line.split("#")[0].strip() for line in f if line.strip() and not line.startswith("#")]

setup(
    name="py-morphgrasp",
    version="0.1.0",
    description="Síntesis de agarres diestros condicionada a la morfología de la mano mediante difusión",
    long_description=long_description,
    long_description_content_type="text/markdown",
    author="MorphGrasp Team",
    author_email="",
    packages=find_packages(include=["py_morphgrasp", "py_morphgrasp.*"]),
    package_data={"py_morphgrasp": ["resources/hands/*.urdf", "resources/hands/*.json"]},
    include_package_data=True,
    install_requires=requirements,
    python_requires=">=3.9",
    entry_points={
        "console_scripts": [
            "morphgrasp=py_morphgrasp.cli.main:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Operating System :: OS Independent",
    ],
    keywords="grasping robotics diffusion urdf dexterous-hands morphology",
)
