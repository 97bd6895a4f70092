"""
Variaciones morfológicas de una mano: quitar, escalar o sustituir dedos.

Cada variación produce un árbol y un mapeo nuevos que vuelven a pasar por
``build_tree`` y ``CanonicalMapping.bind``, así que todas las invariantes del
árbol se revalidan.

- remove: borra el subárbol del dedo (joints y links hijos).
- scale: multiplica las traslaciones de los joints del dedo (salvo el montaje)
  y las cajas de sus links a lo largo del eje del dedo.
- swap: injerta el subárbol del dedo donante en el frame de montaje del dedo
  original; los joints del donante ocupan los slots del dedo original.
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from py_morphgrasp.exceptions import DomainError, MappingError, MutationRefusedError
from py_morphgrasp.hand.canonical import CANONICAL_LAYOUT, FINGERS, CanonicalMapping
from py_morphgrasp.hand.embodiment import load_builtin_embodiment
from py_morphgrasp.kinematics.urdf import JointSpec, KinematicTree, LinkSpec, MimicSpec, build_tree

logger = logging.getLogger(__name__)

VARIATION_KINDS = ("remove_finger", "scale_finger", "swap_finger")
LENGTHEN_FACTOR = 1.5
SHORTEN_FACTOR = 0.8

Hand = Tuple[KinematicTree, CanonicalMapping]


@dataclass(frozen=True)
class MorphologyVariation:
    """
    Una variación sobre un dedo.

    Attributes:
        kind: remove_finger, scale_finger o swap_finger
        finger: thumb, index, middle, ring o pinky
        factor: Factor de longitud (solo scale)
        donor: Embodiment donante (solo swap)
        donor_finger: Dedo del donante (por defecto, el mismo)
    """

    kind: str
    finger: str
    factor: float = 1.0
    donor: Optional[str] = None
    donor_finger: Optional[str] = None

    def __post_init__(self):
        if self.kind not in VARIATION_KINDS:
            raise DomainError(f"Tipo de variación desconocido: {self.kind}")
        if self.finger not in FINGERS:
            raise DomainError(f"Dedo desconocido: {self.finger}")
        if self.kind == "scale_finger" and not self.factor > 0:
            raise DomainError(f"El factor de escala debe ser positivo (recibido {self.factor})")
        if self.kind == "swap_finger" and not self.donor:
            raise DomainError("La sustitución de un dedo necesita un donante")

    @property
    def label(self) -> str:
        if self.kind == "remove_finger":
            return f"remove_{self.finger}"
        if self.kind == "scale_finger":
            return f"scale_{self.finger}_x{self.factor:g}"
        return f"swap_{self.finger}_{self.donor}"

    @classmethod
    def parse(cls, spec: str) -> List["MorphologyVariation"]:
        """
        Interpreta una especificación textual.

        Formato: ``remove <dedo>[,<dedo>]``, ``scale <dedo|all> <factor>`` o
        ``swap <dedo|all> <donante>``.

        Example:
            >>> [v.label for v in MorphologyVariation.parse("remove index,ring")]
            ['remove_index', 'remove_ring']
        """
        parts = spec.split()
        if len(parts) < 2:
            raise DomainError(f"Especificación de variación incompleta: '{spec}'")
        verb, target = parts[0].lower(), parts[1].lower()
        fingers = FINGERS if target == "all" else tuple(f.strip() for f in target.split(",") if f.strip())
        if verb == "remove":
            return [cls("remove_finger", f) for f in fingers]
        if verb == "scale":
            if len(parts) != 3:
                raise DomainError(f"'scale' necesita un factor: '{spec}'")
            return [cls("scale_finger", f, factor=float(parts[2].lstrip("x×"))) for f in fingers]
        if verb == "swap":
            if len(parts) != 3:
                raise DomainError(f"'swap' necesita un donante: '{spec}'")
            donor = parts[2].split("=", 1)[-1]
            if target == "all":
                # Con "all" el meñique toma el anular del donante (donantes de cuatro dedos)
                return [
                    cls("swap_finger", f, donor=donor, donor_finger="ring" if f == "pinky" else None)
                    for f in fingers
                ]
            return [cls("swap_finger", f, donor=donor) for f in fingers]
        raise DomainError(f"Verbo de variación desconocido: '{verb}'")


# =============================================================================
# UTILIDADES DE SUBÁRBOL
# =============================================================================


def _finger_root(tree: KinematicTree, mapping: CanonicalMapping, finger: str) -> int:
    joints = mapping.joints_in_chain(finger)
    if not joints:
        raise MappingError(f"La mano '{tree.name}' no tiene el dedo '{finger}'")
    return tree.joint_index(joints[0])


def _finger_subtree(tree: KinematicTree, mapping: CanonicalMapping, finger: str) -> Tuple[int, ...]:
    indices = tree.subtree_joint_indices(_finger_root(tree, mapping, finger))
    chain_joints = set(mapping.joints_in_chain(finger))
    foreign = [
        tree.joints[i].name
        for i in indices
        if tree.joints[i].is_independent and tree.joints[i].name not in chain_joints
    ]
    if foreign:
        raise MappingError(f"El subárbol del dedo '{finger}' contiene joints de otra cadena: {foreign}")
    return indices


def _rebuild(
    tree: KinematicTree,
    joints: Sequence[JointSpec],
    links: Sequence[LinkSpec],
    entries: Dict[str, int],
    embodiment_name: str,
) -> Hand:
    new_tree = build_tree(joints, links, tree.name)
    names = tuple(entries)
    mapping = CanonicalMapping(
        embodiment_name=embodiment_name,
        joint_names=names,
        slot_of=tuple(entries[n] for n in names),
    ).bind(new_tree)
    return new_tree, mapping


def _entries(mapping: CanonicalMapping) -> Dict[str, int]:
    return dict(zip(mapping.joint_names, mapping.slot_of))


# =============================================================================
# VARIACIONES
# =============================================================================


def _remove(tree: KinematicTree, mapping: CanonicalMapping, finger: str) -> Hand:
    indices = set(_finger_subtree(tree, mapping, finger))
    removed_links = {tree.joints[i].child_link for i in indices}
    removed_joints = {tree.joints[i].name for i in indices}
    joints = [j for i, j in enumerate(tree.joints) if i not in indices]
    links = [link for link in tree.links if link.name not in removed_links]
    entries = {k: v for k, v in _entries(mapping).items() if k not in removed_joints}
    return _rebuild(tree, joints, links, entries, mapping.embodiment_name)


def _box_axis(link: LinkSpec, toward: Optional[np.ndarray]) -> Optional[int]:
    """Eje de la caja alineado con el dedo (dirección del offset o del joint hijo)."""
    R = link.bbox_offset.rotation()
    for direction in (np.asarray(link.bbox_offset.xyz), toward):
        if direction is None or np.linalg.norm(direction) < 1e-12:
            continue
        return int(np.argmax(np.abs(R.T @ direction)))
    return None


def _scale(tree: KinematicTree, mapping: CanonicalMapping, finger: str, factor: float) -> Hand:
    indices = _finger_subtree(tree, mapping, finger)
    root = indices[0]
    scaled_links = {tree.joints[i].child_link for i in indices}

    joints = list(tree.joints)
    for i in indices:
        if i == root:
            continue
        joint = joints[i]
        xyz = tuple(float(v) * factor for v in joint.origin.xyz)
        joints[i] = replace(joint, origin=replace(joint.origin, xyz=xyz))

    child_origin = {}
    for i in indices[1:]:
        child_origin.setdefault(tree.joints[i].parent_link, np.asarray(tree.joints[i].origin.xyz))

    links = []
    for link in tree.links:
        if link.name not in scaled_links or link.bbox_extents is None:
            links.append(link)
            continue
        axis = _box_axis(link, child_origin.get(link.name))
        extents = list(link.bbox_extents)
        if axis is not None:
            extents[axis] *= factor
        offset = replace(link.bbox_offset, xyz=tuple(float(v) * factor for v in link.bbox_offset.xyz))
        links.append(replace(link, bbox_extents=tuple(extents), bbox_offset=offset))
    return _rebuild(tree, joints, links, _entries(mapping), mapping.embodiment_name)


def _swap(
    tree: KinematicTree,
    mapping: CanonicalMapping,
    finger: str,
    donor: Hand,
    donor_name: str,
    donor_finger: str,
) -> Hand:
    donor_tree, donor_mapping = donor
    host_indices = _finger_subtree(tree, mapping, finger)
    host_root = tree.joints[host_indices[0]]
    donor_indices = _finger_subtree(donor_tree, donor_mapping, donor_finger)
    prefix = f"{finger}_{donor_name}_"

    donor_links = {donor_tree.joints[i].child_link for i in donor_indices}
    rename_link = {name: prefix + name for name in donor_links}
    grafted: List[JointSpec] = []
    for k, i in enumerate(donor_indices):
        joint = donor_tree.joints[i]
        grafted.append(
            replace(
                joint,
                name=prefix + joint.name,
                parent_link=host_root.parent_link if k == 0 else rename_link[joint.parent_link],
                child_link=rename_link[joint.child_link],
                origin=host_root.origin if k == 0 else joint.origin,
                mimic=None
                if joint.mimic is None
                else MimicSpec(prefix + joint.mimic.joint, joint.mimic.multiplier, joint.mimic.offset),
            )
        )

    host_set = set(host_indices)
    joints: List[JointSpec] = []
    for i, joint in enumerate(tree.joints):
        if i == host_indices[0]:
            joints.extend(grafted)
        elif i not in host_set:
            joints.append(joint)

    host_links = {tree.joints[i].child_link for i in host_indices}
    links = [link for link in tree.links if link.name not in host_links]
    links += [replace(donor_tree.link(name), name=rename_link[name]) for name in sorted(donor_links)]

    host_joints = {tree.joints[i].name for i in host_indices}
    entries = {k: v for k, v in _entries(mapping).items() if k not in host_joints}
    host_slots = CANONICAL_LAYOUT.chain(finger)
    donor_slots = CANONICAL_LAYOUT.chain(donor_finger)
    donor_chain = donor_mapping.joints_in_chain(donor_finger)
    if len(donor_chain) > len(host_slots):
        raise MappingError(
            f"El dedo '{donor_finger}' de '{donor_name}' tiene {len(donor_chain)} joints y la "
            f"cadena '{finger}' solo {len(host_slots)} slots"
        )
    for joint_name in donor_chain:
        position = donor_slots.index(donor_mapping.slot_of_joint(joint_name))
        entries[prefix + joint_name] = host_slots[position]
    return _rebuild(tree, joints, links, entries, mapping.embodiment_name)


def mutate_morphology(
    tree: KinematicTree,
    mapping: CanonicalMapping,
    variation: MorphologyVariation,
    donor: Optional[Hand] = None,
    allow_thumb_removal: bool = False,
) -> Hand:
    """
    Aplica una variación y devuelve el árbol y el mapeo nuevos.

    Args:
        tree: Árbol de la mano original
        mapping: Mapeo enlazado a ``tree``
        variation: Variación a aplicar
        donor: (árbol, mapeo) del donante; si falta y el donante es una mano
            incluida, se carga automáticamente
        allow_thumb_removal: Permite quitar el pulgar (se registra un aviso)

    Raises:
        MutationRefusedError: quitar el pulgar sin permiso explícito
        MappingError: el dedo no existe en la mano o en el donante
    """
    if variation.kind == "remove_finger":
        if variation.finger == "thumb":
            if not allow_thumb_removal:
                raise MutationRefusedError(
                    "No se quita el pulgar: es necesario para el cierre de fuerza "
                    "(usa allow_thumb_removal para forzarlo)"
                )
            logger.warning(f"Quitando el pulgar de '{tree.name}' por petición explícita")
        result = _remove(tree, mapping, variation.finger)
    elif variation.kind == "scale_finger":
        result = _scale(tree, mapping, variation.finger, variation.factor)
    else:
        if donor is None:
            embodiment = load_builtin_embodiment(variation.donor)
            donor = (embodiment.tree, embodiment.mapping)
        result = _swap(
            tree,
            mapping,
            variation.finger,
            donor,
            variation.donor,
            variation.donor_finger or variation.finger,
        )
    logger.debug(
        f"Variación {variation.label} sobre '{tree.name}': {mapping.n_joints} -> {result[1].n_joints} joints"
    )
    return result


def apply_variations(
    tree: KinematicTree,
    mapping: CanonicalMapping,
    variations: Sequence[MorphologyVariation],
    allow_thumb_removal: bool = False,
) -> Hand:
    """Aplica varias variaciones en orden."""
    for variation in variations:
        tree, mapping = mutate_morphology(tree, mapping, variation, allow_thumb_removal=allow_thumb_removal)
    return tree, mapping


# =============================================================================
# REJILLA DE VARIACIONES SOBRE LA MANO SHADOW
# =============================================================================


def _rows(kind: str, fingers: Sequence[str], **kwargs) -> Tuple[MorphologyVariation, ...]:
    return tuple(MorphologyVariation(kind, f, **kwargs) for f in fingers)


def _swap_all() -> Tuple[MorphologyVariation, ...]:
    return tuple(MorphologyVariation.parse("swap all allegro"))


SHADOW_VARIATION_GRID: Tuple[Tuple[str, str, Tuple[MorphologyVariation, ...]], ...] = (
    ("remove_index", "topological", _rows("remove_finger", ("index",))),
    ("remove_middle", "topological", _rows("remove_finger", ("middle",))),
    ("remove_ring", "topological", _rows("remove_finger", ("ring",))),
    ("remove_pinky", "topological", _rows("remove_finger", ("pinky",))),
    ("remove_index_ring", "topological", _rows("remove_finger", ("index", "ring"))),
    ("remove_middle_pinky", "topological", _rows("remove_finger", ("middle", "pinky"))),
    ("lengthen_thumb", "geometrical", _rows("scale_finger", ("thumb",), factor=LENGTHEN_FACTOR)),
    ("shorten_thumb", "geometrical", _rows("scale_finger", ("thumb",), factor=SHORTEN_FACTOR)),
    ("lengthen_index_ring", "geometrical", _rows("scale_finger", ("index", "ring"), factor=LENGTHEN_FACTOR)),
    ("shorten_index_ring", "geometrical", _rows("scale_finger", ("index", "ring"), factor=SHORTEN_FACTOR)),
    ("lengthen_all", "geometrical", _rows("scale_finger", FINGERS, factor=LENGTHEN_FACTOR)),
    ("shorten_all", "geometrical", _rows("scale_finger", FINGERS, factor=SHORTEN_FACTOR)),
    ("baseline", "embodiment", ()),
    ("swap_thumb", "embodiment", _rows("swap_finger", ("thumb",), donor="allegro")),
    ("swap_index_ring", "embodiment", _rows("swap_finger", ("index", "ring"), donor="allegro")),
    ("swap_all", "embodiment", _swap_all()),
)
