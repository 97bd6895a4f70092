"""Representación continua de rotaciones en 6-D (Gram-Schmidt)."""

import numpy as np
import torch

from py_morphgrasp.exceptions import DegeneracyError

DEGENERACY_EPS = 1e-8
IDENTITY_R6 = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])


def rot6_to_matrix(r6) -> np.ndarray:
    """
    Convierte un vector 6-D en una matriz de rotación.

    Las dos mitades del vector son las dos primeras columnas (sin normalizar)
    de R; la tercera columna es su producto vectorial.

    Raises:
        DegeneracyError: primer vector casi nulo o segundo paralelo al primero

    Example:
        >>> rot6_to_matrix([2, 0, 0, 0, 3, 0])
        array([[1., 0., 0.],
               [0., 1., 0.],
               [0., 0., 1.]])
    """
    r6 = np.asarray(r6, dtype=np.float64)
    if r6.shape != (6,):
        raise DegeneracyError(f"Se esperaba un vector de 6 componentes, forma {r6.shape}")
    a1, a2 = r6[:3], r6[3:]
    n1 = np.linalg.norm(a1)
    if not n1 > DEGENERACY_EPS:
        raise DegeneracyError(f"Primer vector degenerado (norma {n1:.3g})")
    b1 = a1 / n1
    residual = a2 - np.dot(b1, a2) * b1
    n2 = np.linalg.norm(residual)
    if not n2 > DEGENERACY_EPS:
        raise DegeneracyError(f"Segundo vector paralelo al primero (residuo {n2:.3g})")
    b2 = residual / n2
    return np.stack([b1, b2, np.cross(b1, b2)], axis=1)


def matrix_to_rot6(R) -> np.ndarray:
    """Primeras dos columnas de R concatenadas."""
    R = np.asarray(R, dtype=np.float64)
    return np.concatenate([R[:, 0], R[:, 1]])


def rot6_to_matrix_torch(r6: torch.Tensor, eps: float = DEGENERACY_EPS) -> torch.Tensor:
    """
    Versión diferenciable y vectorizada: (..., 6) -> (..., 3, 3).

    No lanza excepciones; las normas se acotan inferiormente con eps, lo que
    permite usarla sobre reconstrucciones ruidosas durante el entrenamiento.
    """
    a1, a2 = r6[..., :3], r6[..., 3:]
    b1 = a1 / a1.norm(dim=-1, keepdim=True).clamp_min(eps)
    residual = a2 - (b1 * a2).sum(dim=-1, keepdim=True) * b1
    b2 = residual / residual.norm(dim=-1, keepdim=True).clamp_min(eps)
    b3 = torch.cross(b1, b2, dim=-1)
    return torch.stack([b1, b2, b3], dim=-1)
