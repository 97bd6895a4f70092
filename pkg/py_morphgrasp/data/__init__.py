"""Datasets de agarres, dataset sintético de la pinza y variaciones morfológicas."""

from py_morphgrasp.data.dataset import GraspDataset, GraspRecord, load_dataset, save_dataset
from py_morphgrasp.data.toy import ToyConfig, generate_toy_dataset
from py_morphgrasp.data.variations import (
    SHADOW_VARIATION_GRID,
    MorphologyVariation,
    apply_variations,
    mutate_morphology,
)

__all__ = [
    "SHADOW_VARIATION_GRID",
    "GraspDataset",
    "GraspRecord",
    "MorphologyVariation",
    "ToyConfig",
    "apply_variations",
    "generate_toy_dataset",
    "load_dataset",
    "mutate_morphology",
    "save_dataset",
]
