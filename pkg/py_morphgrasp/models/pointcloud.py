"""
Codificador de nubes de puntos del objeto.

FPS hasta N_p centros, agrupamiento k-NN, MLP compartida sobre coordenadas
relativas al centro, max-pool por grupo y una capa de self-attention global.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import torch
import torch.nn as nn

from py_morphgrasp.exceptions import ArityError, NumericError

logger = logging.getLogger(__name__)


@dataclass
class PointCloudFeature:
    """P (..., N_p, D) y los centros de grupo (..., N_p, 3)."""

    P: torch.Tensor
    centers: torch.Tensor


def centroid_start(points: np.ndarray) -> int:
    """Índice del punto más cercano al centroide (empates: índice menor)."""
    points = np.asarray(points, dtype=np.float64)
    d = np.linalg.norm(points - points.mean(axis=0), axis=1)
    return int(np.argmin(d))


def farthest_point_sampling(points: np.ndarray, k: int, start: Optional[int] = None) -> np.ndarray:
    """
    Selección voraz max-min de k índices empezando en ``start``.

    Raises:
        ArityError: k fuera de [1, n]

    Example:
        >>> farthest_point_sampling(np.arange(10.0)[:, None] * [1, 0, 0], 2, start=0)
        array([0, 9])
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if not 1 <= k <= n:
        raise ArityError(f"FPS requiere 1 <= k <= n (k={k}, n={n})")
    if start is None:
        start = centroid_start(points)
    selected = np.empty(k, dtype=np.int64)
    selected[0] = start
    dists = np.linalg.norm(points - points[start], axis=1)
    for i in range(1, k):
        idx = int(np.argmax(dists))
        selected[i] = idx
        dists = np.minimum(dists, np.linalg.norm(points - points[idx], axis=1))
    return selected


def group_points(points: np.ndarray, centers: np.ndarray, m: int) -> np.ndarray:
    """
    m vecinos más cercanos de cada centro (empates por índice menor).

    Returns:
        Array (k, m) de índices; el propio centro ocupa la primera columna
    """
    points = np.asarray(points, dtype=np.float64)
    if m > len(points):
        raise ArityError(f"m ({m}) no puede superar el número de puntos ({len(points)})")
    d2 = ((points[None, :, :] - points[np.asarray(centers)][:, None, :]) ** 2).sum(axis=-1)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :m]


class PointEncoder(nn.Module):
    """
    Codificador agrupado: (b, n, 3) -> P (b, N_p, D).

    Example:
        >>> encoder = PointEncoder(feat_size=256, num_groups=64, group_size=32)
        >>> feature = encoder(torch.as_tensor(cloud)[None].float())
    """

    def __init__(self, feat_size: int = 256, num_groups: int = 64, group_size: int = 32, num_heads: int = 1):
        super().__init__()
        self.feat_size = feat_size
        self.num_groups = num_groups
        self.group_size = group_size
        hidden = max(feat_size // 2, 8)
        self.point_mlp = nn.Sequential(
            nn.Linear(3, hidden),
            nn.GELU(),
            nn.Linear(hidden, feat_size),
            nn.GELU(),
            nn.Linear(feat_size, feat_size),
        )
        self.attention = nn.MultiheadAttention(feat_size, num_heads, batch_first=True)
        self.norm = nn.LayerNorm(feat_size)

    def group(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Índices de centros (N_p,) y grupos (N_p, m) de una nube."""
        if len(points) < self.num_groups:
            raise ArityError(
                f"La nube tiene {len(points)} puntos y se necesitan al menos {self.num_groups}"
            )
        centers = farthest_point_sampling(points, self.num_groups)
        return centers, group_points(points, centers, min(self.group_size, len(points)))

    def forward(self, points: torch.Tensor, groups: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> PointCloudFeature:
        """
        Args:
            points: Nube (b, n, 3) o (n, 3)
            groups: Agrupamiento precalculado (solo para una nube compartida por todo el batch)
        """
        squeeze = points.dim() == 2
        if squeeze:
            points = points[None]
        if groups is not None:
            center_idx = torch.as_tensor(groups[0], dtype=torch.long)
            group_idx = torch.as_tensor(groups[1], dtype=torch.long)
            center_xyz = points[:, center_idx]
            relative = points[:, group_idx] - center_xyz[:, :, None, :]
        else:
            relative_parts, center_parts = [], []
            for cloud in points:
                c_idx, g_idx = self.group(cloud.detach().cpu().numpy())
                c_idx = torch.as_tensor(c_idx, dtype=torch.long)
                g_idx = torch.as_tensor(g_idx, dtype=torch.long)
                center_parts.append(cloud[c_idx])
                relative_parts.append(cloud[g_idx] - cloud[c_idx][:, None, :])
            center_xyz = torch.stack(center_parts)
            relative = torch.stack(relative_parts)
        tokens = self.point_mlp(relative).max(dim=2).values
        attended, _ = self.attention(tokens, tokens, tokens, need_weights=False)
        P = self.norm(tokens + attended)
        if not torch.isfinite(P).all():
            raise NumericError("Valor no finito en el codificador de puntos", where="point_encoder")
        result = PointCloudFeature(P=P, centers=center_xyz)
        if squeeze:
            result = PointCloudFeature(P=result.P[0], centers=result.centers[0])
        return result


def encode_points(obj, encoder: PointEncoder, dtype: torch.dtype = torch.float32) -> PointCloudFeature:
    """
    Codifica un ObjectModel (o una nube (n, 3)) con el encoder dado.

    Raises:
        ArityError: n < N_p
    """
    points = getattr(obj, "points", obj)
    return encoder(torch.as_tensor(np.asarray(points), dtype=dtype))
