"""
Comandos CLI - Colección de comandos disponibles.

Este módulo contiene todos los sub-comandos del CLI.
"""

__all__ = ["inspect", "encode", "toydata", "train", "sample", "evaluate", "mutate", "loss_audit"]
