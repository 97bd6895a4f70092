"""
Superficie de la mano colocada por una pose canónica.

Compone: θ_c -> ángulos nativos -> cinemática directa -> puntos de las cajas
de colisión -> frame del objeto (R(r6) p + t). Todo en torch para que las
pérdidas físicas propaguen gradiente hasta la pose.
"""

import logging
from typing import Optional

import numpy as np
import torch

from py_morphgrasp.hand.canonical import CanonicalPose
from py_morphgrasp.hand.embodiment import Embodiment
from py_morphgrasp.hand.rotation import rot6_to_matrix_torch
from py_morphgrasp.kinematics.forward import (
    KinematicChain,
    LabeledPoints,
    SurfaceSamples,
    draw_surface_samples,
)

logger = logging.getLogger(__name__)


class HandSurface:
    """
    Cadena cinemática y datos de superficie de un embodiment.

    Example:
        >>> surface = HandSurface(load_builtin_embodiment("toy_gripper"))
        >>> points = surface.points(x0, surface.draw(256, seed=0))
    """

    def __init__(self, embodiment: Embodiment, dtype: torch.dtype = torch.float64):
        self.embodiment = embodiment
        self.chain = KinematicChain(embodiment.tree, dtype=dtype)
        self.dtype = dtype
        # El mapeo enlazado sigue el orden de GDL del árbol
        self.slot_index = torch.as_tensor(embodiment.mapping.slot_of, dtype=torch.long)
        self.adjacency = embodiment.tree.link_adjacency()

    def draw(self, n_points: int, seed: int) -> SurfaceSamples:
        return draw_surface_samples(self.embodiment.tree, n_points, seed)

    def joint_angles(self, x: torch.Tensor) -> torch.Tensor:
        """Ángulos nativos (b, n_dof) a partir de vectores canónicos (b, 33)."""
        return x[:, 9:][:, self.slot_index]

    def points(
        self,
        x: torch.Tensor,
        samples: SurfaceSamples,
        frame_rotation: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        """
        Puntos de superficie (b, n, 3) en el frame del objeto.

        Args:
            x: Vectores canónicos (b, 33)
            samples: Parametrización congelada de los puntos
            frame_rotation: Rotaciones (b, 3, 3) extra aplicadas al final
                (deshace la canonicalización del frame)
        """
        x = x.to(self.dtype)
        link_mats = self.chain.link_matrices(self.joint_angles(x))
        local = self.chain.transform_samples(link_mats, samples)
        R = rot6_to_matrix_torch(x[:, 3:9])
        world = torch.einsum("bij,bnj->bni", R, local) + x[:, None, :3]
        if frame_rotation is not None:
            world = torch.einsum("bij,bnj->bni", frame_rotation.to(self.dtype), world)
        return world

    def labeled_points(self, pose: CanonicalPose, n_points: int, seed: int) -> LabeledPoints:
        """Puntos etiquetados (numpy) de una pose concreta."""
        samples = self.draw(n_points, seed)
        x = torch.as_tensor(pose.to_vector(), dtype=self.dtype)[None]
        with torch.no_grad():
            points = self.points(x, samples)[0].numpy()
        return LabeledPoints(points=points, link_index=samples.link_index)

    @property
    def n_links(self) -> int:
        return len(self.embodiment.tree.links)


def hand_surface_points(
    pose: CanonicalPose, embodiment: Embodiment, n_points: int = 512, seed: int = 0
) -> LabeledPoints:
    """Atajo: puntos de superficie de la mano colocada por ``pose``."""
    return HandSurface(embodiment).labeled_points(pose, n_points, seed)
