"""
Métricas de evaluación: diversidad de un lote de agarres e informe de calidad
de un agarre individual a partir de la SDF del objeto.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import torch
from scipy.spatial.transform import Rotation

from py_morphgrasp.config import LossConfig
from py_morphgrasp.core.losses import erf_loss, spf_loss, spf_membership, srf_loss
from py_morphgrasp.exceptions import DomainError, EmbodimentError
from py_morphgrasp.geometry.objects import ObjectModel
from py_morphgrasp.geometry.sdf import signed_distance
from py_morphgrasp.hand.canonical import CanonicalPose
from py_morphgrasp.hand.embodiment import Embodiment
from py_morphgrasp.hand.rotation import rot6_to_matrix
from py_morphgrasp.hand.surface import HandSurface

logger = logging.getLogger(__name__)


def diversity_channels(pose: CanonicalPose) -> np.ndarray:
    """Traslación, rotación como vector de rotación (rad) y ángulos activos."""
    rotvec = Rotation.from_matrix(rot6_to_matrix(pose.r6)).as_rotvec()
    active = np.asarray(pose.delta, dtype=bool)
    return np.concatenate([pose.t, rotvec, pose.theta_c[active]])


def diversity(poses: Sequence[CanonicalPose]) -> float:
    """
    Media de la desviación típica poblacional por canal.

    Raises:
        DomainError: menos de dos poses
        EmbodimentError: las poses no comparten δ

    Example:
        >>> diversity([pose_a, pose_a])
        0.0
    """
    if len(poses) < 2:
        raise DomainError(f"La diversidad necesita al menos 2 poses (recibidas {len(poses)})")
    delta = np.asarray(poses[0].delta)
    for i, pose in enumerate(poses[1:], start=1):
        if not np.array_equal(pose.delta, delta):
            raise EmbodimentError(f"La pose {i} tiene una máscara δ distinta")
    channels = np.stack([diversity_channels(p) for p in poses])
    return float(channels.std(axis=0).mean())


@dataclass
class QualityReport:
    """Indicadores de calidad de un agarre (distancias en metros)."""

    max_penetration: float
    contact_count: int
    min_clearance: float
    spf: float
    erf: float
    srf: float
    spf_members: int = 0

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def grasp_quality(
    pose: CanonicalPose,
    embodiment: Embodiment,
    obj: ObjectModel,
    loss_config: Optional[LossConfig] = None,
    seed: int = 0,
) -> QualityReport:
    """
    Coloca la mano, consulta la SDF del objeto y evalúa las pérdidas físicas.

    Raises:
        EmbodimentError: δ de la pose distinta a la máscara del embodiment
    """
    loss_config = loss_config or LossConfig()
    if not np.array_equal(pose.delta, embodiment.mask):
        raise EmbodimentError(f"La máscara de la pose no corresponde a '{embodiment.name}'")

    surface = HandSurface(embodiment)
    labeled = surface.labeled_points(pose, loss_config.hand_points, seed)
    sdf = signed_distance(obj, labeled.points)
    points = torch.as_tensor(labeled.points, dtype=torch.float64)
    with torch.no_grad():
        spf = float(spf_loss(points, obj, loss_config))
        erf = float(erf_loss(points, obj, loss_config))
        srf = float(srf_loss(labeled, loss_config, adjacency=surface.adjacency))

    report = QualityReport(
        max_penetration=float(max(0.0, -sdf.min())),
        contact_count=int((np.abs(sdf) < loss_config.contact_tolerance).sum()),
        min_clearance=float(max(0.0, sdf.min())),
        spf=spf,
        erf=erf,
        srf=srf,
        spf_members=spf_membership(points, obj, loss_config.tau),
    )
    logger.debug(f"Calidad en '{obj.name}': {report}")
    return report
