"""Árboles cinemáticos URDF y cinemática directa."""

from py_morphgrasp.kinematics.forward import (
    KinematicChain,
    LabeledPoints,
    LinkTransforms,
    SurfaceSamples,
    descendant_counts,
    draw_surface_samples,
    forward_kinematics,
    sample_hand_surface,
)
from py_morphgrasp.kinematics.urdf import (
    JointSpec,
    KinematicTree,
    LinkSpec,
    MimicSpec,
    Origin,
    build_tree,
    load_urdf,
    parse_urdf,
    tree_to_dict,
    tree_to_urdf,
)

__all__ = [
    "JointSpec",
    "KinematicChain",
    "KinematicTree",
    "LabeledPoints",
    "LinkSpec",
    "LinkTransforms",
    "MimicSpec",
    "Origin",
    "SurfaceSamples",
    "build_tree",
    "descendant_counts",
    "draw_surface_samples",
    "forward_kinematics",
    "load_urdf",
    "parse_urdf",
    "sample_hand_surface",
    "tree_to_dict",
    "tree_to_urdf",
]
