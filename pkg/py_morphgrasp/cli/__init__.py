"""
CLI (Command Line Interface) - Interfaz de línea de comandos.

Este módulo implementa el comando ``morphgrasp`` usando Click: inspección de
manos, entrenamiento, muestreo, evaluación y variaciones morfológicas.
"""

__all__ = ["main"]
