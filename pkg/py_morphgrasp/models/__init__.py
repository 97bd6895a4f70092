"""Redes: codificador de morfología, codificador de puntos y denoiser."""

from py_morphgrasp.models.checkpoint import load_model, read_checkpoint, save_checkpoint
from py_morphgrasp.models.denoiser import MorphDenoiser, predict_noise
from py_morphgrasp.models.grasp_model import GraspDiffusionModel
from py_morphgrasp.models.morphology import (
    MorphologyEncoder,
    build_graph_structure,
    encode_morphology,
    extract_joint_morphology,
)
from py_morphgrasp.models.pointcloud import PointCloudFeature, PointEncoder, encode_points

__all__ = [
    "GraspDiffusionModel",
    "MorphDenoiser",
    "MorphologyEncoder",
    "PointCloudFeature",
    "PointEncoder",
    "build_graph_structure",
    "encode_morphology",
    "encode_points",
    "extract_joint_morphology",
    "load_model",
    "predict_noise",
    "read_checkpoint",
    "save_checkpoint",
]
