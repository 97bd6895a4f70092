"""
Modelo completo: codificador de morfología, codificador de puntos y denoiser.
"""

import logging
from typing import Dict, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn

from py_morphgrasp.config import ModelConfig, RunConfig
from py_morphgrasp.hand.embodiment import Embodiment
from py_morphgrasp.kinematics.urdf import KinematicTree
from py_morphgrasp.models.denoiser import MorphDenoiser
from py_morphgrasp.models.morphology import MorphologyEncoder, extract_joint_morphology
from py_morphgrasp.models.pointcloud import PointCloudFeature, PointEncoder

logger = logging.getLogger(__name__)


class GraspDiffusionModel(nn.Module):
    """
    ε_φ condicionado por la morfología de la mano y la nube del objeto.

    ``step`` es None hasta que el modelo se entrena o se carga desde un
    checkpoint.
    """

    def __init__(self, model_config: Optional[ModelConfig] = None, num_steps: int = 100):
        super().__init__()
        model_config = model_config or ModelConfig()
        self.model_config = model_config
        self.num_steps = num_steps
        self.morph_encoder = MorphologyEncoder(
            feat_size=model_config.feature_dim,
            num_layers=model_config.morph_layers,
            num_heads=model_config.morph_heads,
            max_hops=model_config.max_hops,
            use_graph_bias=model_config.use_graph_bias,
            hard_mask=model_config.hard_mask,
            standardize=model_config.standardize_features,
            ffn_mult=model_config.ffn_mult,
        )
        self.point_encoder = PointEncoder(
            feat_size=model_config.feature_dim,
            num_groups=model_config.point_groups,
            group_size=model_config.group_size,
        )
        self.denoiser = MorphDenoiser(
            feat_size=model_config.feature_dim,
            num_blocks=model_config.denoiser_blocks,
            num_steps=num_steps,
            num_heads=model_config.denoiser_heads,
            ffn_mult=model_config.ffn_mult,
            use_morphology=model_config.use_morphology,
        )
        self.step: Optional[int] = None
        self.run_config: Optional[RunConfig] = None
        self._morphology_cache: Dict[str, Tuple[KinematicTree, np.ndarray, np.ndarray]] = {}

    @classmethod
    def from_run_config(cls, run_config: RunConfig) -> "GraspDiffusionModel":
        model = cls(run_config.model, num_steps=run_config.schedule.steps)
        model.run_config = run_config
        return model

    @property
    def dtype(self) -> torch.dtype:
        return self.denoiser.head.weight.dtype

    def joint_morphology(self, embodiment: Embodiment) -> Tuple[np.ndarray, np.ndarray]:
        """(J, δ) de un embodiment, recalculados solo si cambia su árbol."""
        cached = self._morphology_cache.get(embodiment.name)
        if cached is None or cached[0] is not embodiment.tree:
            J = extract_joint_morphology(embodiment.tree, embodiment.mapping)
            cached = (embodiment.tree, J, embodiment.mask)
            self._morphology_cache[embodiment.name] = cached
            logger.debug(f"Morfología de '{embodiment.name}' calculada")
        return cached[1], cached[2]

    def encode_morphology(self, embodiment: Embodiment) -> Tuple[torch.Tensor, torch.Tensor]:
        """M (24, D) y δ (24,) de un embodiment."""
        J, delta = self.joint_morphology(embodiment)
        J_t = torch.as_tensor(J, dtype=self.dtype)[None]
        delta_t = torch.as_tensor(delta, dtype=self.dtype)[None]
        return self.morph_encoder(J_t, delta_t)[0], delta_t[0]

    def encode_points(self, points, groups=None) -> PointCloudFeature:
        return self.point_encoder(torch.as_tensor(np.asarray(points), dtype=self.dtype), groups)

    def fit_standardization(self, embodiments):
        """Ajusta la estandarización de J sobre las manos dadas."""
        pairs = [self.joint_morphology(e) for e in embodiments]
        self.morph_encoder.fit_standardization([J for J, _ in pairs], [d for _, d in pairs])

    def forward(self, x_t, delta, M, P, t) -> torch.Tensor:
        return self.denoiser(x_t, delta, M, P, t)
