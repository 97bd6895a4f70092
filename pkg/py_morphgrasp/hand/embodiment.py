"""
Embodiments: un árbol cinemático junto con su mapeo canónico.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

import numpy as np

from py_morphgrasp import config
from py_morphgrasp.exceptions import MappingError
from py_morphgrasp.hand.canonical import CanonicalMapping, active_mask, load_mapping
from py_morphgrasp.kinematics.urdf import KinematicTree, load_urdf

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Embodiment:
    """Mano registrada: árbol, mapeo enlazado y nombre."""

    name: str
    tree: KinematicTree
    mapping: CanonicalMapping

    @property
    def n_dof(self) -> int:
        return self.tree.n_dof

    @property
    def mask(self) -> np.ndarray:
        return active_mask(self.mapping)


def default_mapping_path(urdf_path: Union[str, Path]) -> Path:
    """``mano.urdf`` -> ``mano.mapping.json`` en el mismo directorio."""
    urdf_path = Path(urdf_path)
    return urdf_path.with_name(f"{urdf_path.stem}.mapping.json")


def load_embodiment(
    urdf_path: Union[str, Path],
    mapping_path: Optional[Union[str, Path]] = None,
    name: Optional[str] = None,
) -> Embodiment:
    """
    Carga un URDF y su mapeo canónico.

    Args:
        urdf_path: Archivo URDF
        mapping_path: Mapeo JSON; por defecto ``<stem>.mapping.json`` junto al URDF
        name: Nombre del embodiment (por defecto el del mapeo)

    Raises:
        MappingError: no hay mapeo o no cubre los GDL del árbol
    """
    tree = load_urdf(urdf_path)
    mapping_path = Path(mapping_path) if mapping_path else default_mapping_path(urdf_path)
    if not mapping_path.exists():
        raise MappingError(f"No se encontró el mapeo canónico: {mapping_path}")
    mapping = load_mapping(mapping_path, tree)
    embodiment = Embodiment(name=name or mapping.embodiment_name, tree=tree, mapping=mapping)
    logger.info(
        f"Embodiment '{embodiment.name}' cargado: {tree.n_dof} GDL, "
        f"{int(embodiment.mask.sum())} slots activos"
    )
    return embodiment


@lru_cache(maxsize=None)
def load_builtin_embodiment(name: str) -> Embodiment:
    """Carga una de las manos incluidas en el paquete (shadow, allegro, barrett, toy_gripper)."""
    paths = config.builtin_hand_paths(name)
    return load_embodiment(paths["urdf"], paths["mapping"], name=name)
