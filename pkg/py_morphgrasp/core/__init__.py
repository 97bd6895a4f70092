"""
Módulo Core - Lógica principal del modelo de difusión.

Este módulo contiene la maquinaria DDPM, las pérdidas, el entrenamiento, el
muestreo, las métricas de evaluación y la generación de informes.
"""

__all__ = ["diffusion", "losses", "training", "sampling", "metrics", "reports"]
