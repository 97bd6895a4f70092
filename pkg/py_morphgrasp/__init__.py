"""
py_morphgrasp - Generación de agarres diestros conscientes de la morfología.

Este paquete proporciona funcionalidad para:
- Parsear descripciones URDF de manos y calcular cinemática directa
- Mapear embodiments heterogéneos al formato canónico de 24 slots
- Codificar la morfología de la mano con atención sesgada por el grafo cinemático
- Entrenar y muestrear un modelo de difusión condicionado (DDPM)
- Evaluar agarres con pérdidas físicas y métricas de diversidad
- Generar variaciones morfológicas (quitar, escalar e intercambiar dedos)
"""

__version__ = "0.1.0"
