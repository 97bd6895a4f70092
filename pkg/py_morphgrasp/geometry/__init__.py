"""Geometría de objetos y consultas de distancia con signo."""

from py_morphgrasp.geometry.objects import (
    ObjectModel,
    box_object,
    load_object,
    save_object_ply,
    sphere_object,
)
from py_morphgrasp.geometry.sdf import MeshSDF, PointCloudSDF, object_sdf, signed_distance

__all__ = [
    "MeshSDF",
    "ObjectModel",
    "PointCloudSDF",
    "box_object",
    "load_object",
    "object_sdf",
    "save_object_ply",
    "signed_distance",
    "sphere_object",
]
