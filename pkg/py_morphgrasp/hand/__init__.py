"""Formato canónico de manos, rotaciones 6-D y embodiments."""

from py_morphgrasp.hand.canonical import (
    CANONICAL_LAYOUT,
    N_SLOTS,
    POSE_DIM,
    CanonicalLayout,
    CanonicalMapping,
    CanonicalPose,
    HandPose,
    active_mask,
    from_canonical,
    load_mapping,
    to_canonical,
)
from py_morphgrasp.hand.embodiment import Embodiment, load_builtin_embodiment, load_embodiment
from py_morphgrasp.hand.rotation import IDENTITY_R6, matrix_to_rot6, rot6_to_matrix
from py_morphgrasp.hand.surface import HandSurface, hand_surface_points

__all__ = [
    "CANONICAL_LAYOUT",
    "IDENTITY_R6",
    "N_SLOTS",
    "POSE_DIM",
    "CanonicalLayout",
    "CanonicalMapping",
    "CanonicalPose",
    "Embodiment",
    "HandPose",
    "HandSurface",
    "active_mask",
    "from_canonical",
    "hand_surface_points",
    "load_builtin_embodiment",
    "load_embodiment",
    "load_mapping",
    "matrix_to_rot6",
    "rot6_to_matrix",
    "to_canonical",
]
