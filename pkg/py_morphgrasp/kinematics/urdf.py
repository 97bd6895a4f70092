"""
Parser URDF para manos robóticas.

Este módulo convierte el subconjunto URDF que usan las manos (link, joint,
origin, axis, limit, mimic, collision/box) en un KinematicTree inmutable, y
ofrece la serialización canónica (JSON) y la escritura de vuelta a URDF.

El orden de los joints es un recorrido en profundidad desde la raíz, visitando
a los hijos en el orden del documento. Ese orden es el contrato para todos los
arrays por joint del paquete.

Example:
    >>> tree = load_urdf("py_morphgrasp/resources/hands/shadow.urdf")
    >>> tree.n_dof
    24
"""

import json
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from py_morphgrasp.exceptions import (
    JointValidationError,
    KinematicStructureError,
    URDFParseError,
)

logger = logging.getLogger(__name__)

Vec3 = Tuple[float, float, float]

JOINT_TYPES = ("revolute", "continuous", "prismatic", "fixed")
AXIS_TOLERANCE = 1e-6
SERIALIZATION_VERSION = 1


@dataclass(frozen=True)
class Origin:
    """Transformación rígida URDF: traslación (m) y roll-pitch-yaw (rad)."""

    xyz: Vec3 = (0.0, 0.0, 0.0)
    rpy: Vec3 = (0.0, 0.0, 0.0)

    def rotation(self) -> np.ndarray:
        return rpy_to_matrix(self.rpy)

    def matrix(self) -> np.ndarray:
        T = np.eye(4, dtype=np.float64)
        T[:3, :3] = self.rotation()
        T[:3, 3] = self.xyz
        return T

    def to_dict(self) -> Dict[str, List[float]]:
        return {"xyz": list(self.xyz), "rpy": list(self.rpy)}

    @classmethod
    def from_dict(cls, values: Optional[Mapping[str, Sequence[float]]]) -> "Origin":
        values = values or {}
        return cls(
            xyz=_vec3(values.get("xyz", (0.0, 0.0, 0.0))),
            rpy=_vec3(values.get("rpy", (0.0, 0.0, 0.0))),
        )


@dataclass(frozen=True)
class MimicSpec:
    """Acoplamiento mimic: q = multiplier * q_source + offset."""

    joint: str
    multiplier: float = 1.0
    offset: float = 0.0


@dataclass(frozen=True)
class JointSpec:
    """Joint URDF con su origen, eje, límites y acoplamiento opcional."""

    name: str
    joint_type: str
    parent_link: str
    child_link: str
    origin: Origin = field(default_factory=Origin)
    axis: Vec3 = (1.0, 0.0, 0.0)
    limit_lower: float = 0.0
    limit_upper: float = 0.0
    mimic: Optional[MimicSpec] = None

    @property
    def kind(self) -> str:
        """Uno de revolute, prismatic, fixed o mimic."""
        if self.joint_type == "fixed":
            return "fixed"
        if self.mimic is not None:
            return "mimic"
        if self.joint_type == "prismatic":
            return "prismatic"
        return "revolute"

    @property
    def is_independent(self) -> bool:
        return self.kind in ("revolute", "prismatic")

    @property
    def is_prismatic(self) -> bool:
        return self.joint_type == "prismatic"

    def to_dict(self) -> Dict[str, Any]:
        values: Dict[str, Any] = {
            "name": self.name,
            "type": self.joint_type,
            "parent": self.parent_link,
            "child": self.child_link,
            "origin": self.origin.to_dict(),
            "axis": list(self.axis),
            "limit": [self.limit_lower, self.limit_upper],
        }
        if self.mimic is not None:
            values["mimic"] = {
                "joint": self.mimic.joint,
                "multiplier": self.mimic.multiplier,
                "offset": self.mimic.offset,
            }
        return values


@dataclass(frozen=True)
class LinkSpec:
    """Link con la caja envolvente de su geometría de colisión."""

    name: str
    bbox_extents: Optional[Vec3] = None
    bbox_offset: Origin = field(default_factory=Origin)

    @property
    def has_bounds(self) -> bool:
        return self.bbox_extents is not None

    @property
    def surface_area(self) -> float:
        if self.bbox_extents is None:
            return 0.0
        l, w, h = self.bbox_extents
        return 2.0 * (l * w + l * h + w * h)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "bbox_extents": list(self.bbox_extents) if self.bbox_extents is not None else None,
            "bbox_offset": self.bbox_offset.to_dict(),
        }


@dataclass(frozen=True)
class KinematicTree:
    """
    Árbol cinemático de una mano.

    Los joints están en orden DFS desde la raíz; ``parent_of[i]`` es el índice
    del joint cuyo link hijo es el link padre de ``joints[i]`` (None si el
    padre es el link raíz). Se construye siempre mediante ``build_tree``.
    """

    name: str
    root_link: str
    joints: Tuple[JointSpec, ...]
    links: Tuple[LinkSpec, ...]
    parent_of: Tuple[Optional[int], ...]

    @property
    def dof_indices(self) -> Tuple[int, ...]:
        """Índices de los joints con grado de libertad independiente."""
        return tuple(i for i, j in enumerate(self.joints) if j.is_independent)

    @property
    def dof_names(self) -> Tuple[str, ...]:
        return tuple(self.joints[i].name for i in self.dof_indices)

    @property
    def n_dof(self) -> int:
        return len(self.dof_indices)

    @property
    def link_names(self) -> Tuple[str, ...]:
        return tuple(link.name for link in self.links)

    def joint_index(self, name: str) -> int:
        for i, joint in enumerate(self.joints):
            if joint.name == name:
                return i
        raise KeyError(f"Joint desconocido: {name}")

    def link_index(self, name: str) -> int:
        for i, link in enumerate(self.links):
            if link.name == name:
                return i
        raise KeyError(f"Link desconocido: {name}")

    def joint(self, name: str) -> JointSpec:
        return self.joints[self.joint_index(name)]

    def link(self, name: str) -> LinkSpec:
        return self.links[self.link_index(name)]

    def parent_joint_of_link(self, link_name: str) -> Optional[int]:
        for i, joint in enumerate(self.joints):
            if joint.child_link == link_name:
                return i
        return None

    def subtree_joint_indices(self, joint_index: int) -> Tuple[int, ...]:
        """El joint y todos los joints por debajo de él (orden DFS)."""
        members = {joint_index}
        for i in range(joint_index + 1, len(self.joints)):
            if self.parent_of[i] in members:
                members.add(i)
        return tuple(sorted(members))

    def link_adjacency(self) -> Tuple[Tuple[int, int], ...]:
        """Pares (link padre, link hijo) unidos por algún joint."""
        return tuple(
            (self.link_index(j.parent_link), self.link_index(j.child_link)) for j in self.joints
        )

    def to_dict(self) -> Dict[str, Any]:
        return tree_to_dict(self)


# =============================================================================
# GEOMETRÍA BÁSICA
# =============================================================================


def rpy_to_matrix(rpy: Sequence[float]) -> np.ndarray:
    """Rotación URDF: R = Rz(yaw) * Ry(pitch) * Rx(roll)."""
    roll, pitch, yaw = rpy
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    Rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    Ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    Rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return Rz @ Ry @ Rx


def _vec3(values: Sequence[Any]) -> Vec3:
    items = tuple(float(v) for v in values)
    if len(items) != 3:
        raise ValueError(f"Se esperaban 3 componentes, recibidas {len(items)}")
    return items  # type: ignore[return-value]


def _parse_floats(text: Optional[str], default: Vec3, where: str, line: Optional[int]) -> Vec3:
    if text is None:
        return default
    try:
        return _vec3(text.split())
    except ValueError as ex:
        raise URDFParseError(f"Vector inválido en {where}: '{text}'", line) from ex


# =============================================================================
# PARSER
# =============================================================================


def _line_of(element: ET.Element, line_index: Mapping[int, int]) -> Optional[int]:
    return line_index.get(id(element))


def _index_lines(xml_text: str) -> Tuple[ET.Element, Dict[int, int]]:
    """Parsea el XML guardando la línea de cada elemento para los diagnósticos."""
    parser = ET.XMLPullParser(events=("start",))
    line_index: Dict[int, int] = {}
    root = None
    try:
        for number, line in enumerate(xml_text.splitlines(keepends=True), start=1):
            parser.feed(line)
            for _, element in parser.read_events():
                line_index[id(element)] = number
                if root is None:
                    root = element
        parser.close()
    except ET.ParseError as ex:
        line = ex.position[0] if getattr(ex, "position", None) else None
        raise URDFParseError(f"XML mal formado: {ex}", line) from ex
    if root is None:
        raise URDFParseError("Documento XML vacío", 1)
    return root, line_index


def _parse_collision_bounds(
    link_el: ET.Element,
    name: str,
    mesh_bounds: Optional[Mapping[str, Mapping[str, Any]]],
    line_index: Mapping[int, int],
) -> Tuple[Optional[Vec3], Origin]:
    collision = link_el.find("collision")
    if collision is None:
        return None, Origin()
    line = _line_of(collision, line_index)
    origin = _parse_origin(collision.find("origin"), line_index)
    geometry = collision.find("geometry")
    if geometry is None:
        raise URDFParseError(f"El link '{name}' tiene <collision> sin <geometry>", line)

    box = geometry.find("box")
    if box is not None:
        return _parse_floats(box.get("size"), (0.0, 0.0, 0.0), f"box de '{name}'", line), origin

    cylinder = geometry.find("cylinder")
    if cylinder is not None:
        radius = float(cylinder.get("radius", "0"))
        length = float(cylinder.get("length", "0"))
        return (2 * radius, 2 * radius, length), origin

    sphere = geometry.find("sphere")
    if sphere is not None:
        radius = float(sphere.get("radius", "0"))
        return (2 * radius, 2 * radius, 2 * radius), origin

    if geometry.find("mesh") is not None:
        if not mesh_bounds or name not in mesh_bounds:
            raise URDFParseError(
                f"El link '{name}' usa una malla sin archivo de límites (sidecar)", line
            )
        entry = mesh_bounds[name]
        return _vec3(entry["extents"]), Origin.from_dict(entry.get("offset"))

    raise URDFParseError(f"Geometría de colisión no soportada en '{name}'", line)


def _parse_origin(origin_el: Optional[ET.Element], line_index: Mapping[int, int]) -> Origin:
    if origin_el is None:
        return Origin()
    line = _line_of(origin_el, line_index)
    return Origin(
        xyz=_parse_floats(origin_el.get("xyz"), (0.0, 0.0, 0.0), "origin xyz", line),
        rpy=_parse_floats(origin_el.get("rpy"), (0.0, 0.0, 0.0), "origin rpy", line),
    )


def _parse_joint(joint_el: ET.Element, line_index: Mapping[int, int]) -> JointSpec:
    line = _line_of(joint_el, line_index)
    name = joint_el.get("name")
    joint_type = joint_el.get("type")
    if not name:
        raise URDFParseError("Joint sin atributo 'name'", line)
    if joint_type not in JOINT_TYPES:
        raise URDFParseError(f"Tipo de joint no soportado en '{name}': {joint_type}", line)

    parent_el = joint_el.find("parent")
    child_el = joint_el.find("child")
    if parent_el is None or child_el is None:
        raise URDFParseError(f"El joint '{name}' necesita <parent> y <child>", line)

    axis_el = joint_el.find("axis")
    axis = _parse_floats(
        axis_el.get("xyz") if axis_el is not None else None,
        (1.0, 0.0, 0.0),
        f"axis de '{name}'",
        line,
    )

    mimic_el = joint_el.find("mimic")
    mimic = None
    if mimic_el is not None:
        mimic = MimicSpec(
            joint=mimic_el.get("joint", ""),
            multiplier=float(mimic_el.get("multiplier", "1")),
            offset=float(mimic_el.get("offset", "0")),
        )

    limit_el = joint_el.find("limit")
    lower = upper = 0.0
    if joint_type == "fixed":
        pass
    elif limit_el is not None and limit_el.get("lower") is not None:
        lower = float(limit_el.get("lower"))
        upper = float(limit_el.get("upper", "0"))
    elif joint_type == "continuous":
        lower, upper = -math.pi, math.pi
    elif mimic is None:
        raise JointValidationError(f"El joint '{name}' ({joint_type}) no define <limit> (línea {line})")
    else:
        lower = upper = float("nan")  # se derivan del joint fuente

    return JointSpec(
        name=name,
        joint_type=joint_type,
        parent_link=parent_el.get("link", ""),
        child_link=child_el.get("link", ""),
        origin=_parse_origin(joint_el.find("origin"), line_index),
        axis=axis,
        limit_lower=lower,
        limit_upper=upper,
        mimic=mimic,
    )


def parse_urdf(
    xml_text: str,
    mesh_bounds: Optional[Mapping[str, Mapping[str, Any]]] = None,
    name: Optional[str] = None,
) -> KinematicTree:
    """
    Parsea un documento URDF y construye el árbol cinemático.

    Args:
        xml_text: Contenido XML del URDF
        mesh_bounds: Sidecar {link: {extents, offset}} para links con malla
        name: Nombre de la mano (por defecto, el atributo name de <robot>)

    Returns:
        KinematicTree validado

    Raises:
        URDFParseError: XML mal formado (con número de línea)
        KinematicStructureError: grafo con ciclos o sin raíz única
        JointValidationError: joint sin límites, eje nulo o mimic inválido
    """
    root, line_index = _index_lines(xml_text)
    if root.tag != "robot":
        raise URDFParseError(f"Se esperaba <robot>, encontrado <{root.tag}>", _line_of(root, line_index))

    links: List[LinkSpec] = []
    for link_el in root.findall("link"):
        link_name = link_el.get("name")
        if not link_name:
            raise URDFParseError("Link sin atributo 'name'", _line_of(link_el, line_index))
        extents, offset = _parse_collision_bounds(link_el, link_name, mesh_bounds, line_index)
        links.append(LinkSpec(name=link_name, bbox_extents=extents, bbox_offset=offset))

    joints = [_parse_joint(joint_el, line_index) for joint_el in root.findall("joint")]
    tree = build_tree(joints, links, name or root.get("name", "hand"))
    logger.debug(
        f"URDF '{tree.name}' parseado: {len(tree.links)} links, {len(tree.joints)} joints, "
        f"{tree.n_dof} GDL independientes"
    )
    return tree


def load_urdf(path: Union[str, Path]) -> KinematicTree:
    """
    Carga un URDF desde disco junto con su sidecar de límites, si existe.

    El sidecar se busca como ``<nombre>.bounds.json`` junto al URDF.
    """
    path = Path(path)
    xml_text = path.read_text(encoding="utf-8")
    sidecar = path.with_suffix(".bounds.json")
    mesh_bounds = None
    if sidecar.exists():
        with open(sidecar, encoding="utf-8") as f:
            mesh_bounds = json.load(f)
        logger.debug(f"Sidecar de límites cargado: {sidecar}")
    return parse_urdf(xml_text, mesh_bounds=mesh_bounds, name=path.stem)


# =============================================================================
# CONSTRUCCIÓN Y VALIDACIÓN DEL ÁRBOL
# =============================================================================


def _normalized_axis(joint: JointSpec) -> Vec3:
    norm = math.sqrt(sum(a * a for a in joint.axis))
    if norm < AXIS_TOLERANCE:
        if joint.joint_type == "fixed":
            return (1.0, 0.0, 0.0)
        raise JointValidationError(f"El joint '{joint.name}' tiene un eje nulo")
    if abs(norm - 1.0) <= 1e-12:
        return joint.axis
    return (joint.axis[0] / norm, joint.axis[1] / norm, joint.axis[2] / norm)


def build_tree(
    joints: Sequence[JointSpec], links: Sequence[LinkSpec], name: str = "hand"
) -> KinematicTree:
    """
    Valida joints y links y los ordena en DFS desde la única raíz.

    Raises:
        KinematicStructureError: nombres repetidos, referencias rotas, ciclos
            o más de una raíz
        JointValidationError: límites invertidos, eje nulo o mimic inválido
    """
    link_by_name: Dict[str, LinkSpec] = {}
    for link in links:
        if link.name in link_by_name:
            raise KinematicStructureError(f"Link duplicado: {link.name}")
        if link.bbox_extents is not None and min(link.bbox_extents) < 0:
            raise JointValidationError(f"Extensiones negativas en el link '{link.name}'")
        link_by_name[link.name] = link

    joint_names = set()
    child_owner: Dict[str, str] = {}
    for joint in joints:
        if joint.name in joint_names:
            raise KinematicStructureError(f"Joint duplicado: {joint.name}")
        joint_names.add(joint.name)
        for ref in (joint.parent_link, joint.child_link):
            if ref not in link_by_name:
                raise KinematicStructureError(
                    f"El joint '{joint.name}' referencia un link inexistente: '{ref}'"
                )
        if joint.child_link in child_owner:
            raise KinematicStructureError(
                f"El link '{joint.child_link}' tiene dos joints padre: "
                f"'{child_owner[joint.child_link]}' y '{joint.name}'"
            )
        child_owner[joint.child_link] = joint.name

    roots = [link.name for link in links if link.name not in child_owner]
    if len(roots) != 1:
        raise KinematicStructureError(
            f"Se esperaba exactamente un link raíz, encontrados {len(roots)}: {roots} "
            "(¿ciclo en el grafo de links?)"
        )
    root = roots[0]

    # Normalización de ejes y resolución de los límites mimic
    by_name = {j.name: j for j in joints}
    resolved: Dict[str, JointSpec] = {}
    for joint in joints:
        axis = _normalized_axis(joint)
        lower, upper = joint.limit_lower, joint.limit_upper
        if joint.mimic is not None and joint.joint_type != "fixed":
            source = by_name.get(joint.mimic.joint)
            if source is None or source.name == joint.name:
                raise JointValidationError(
                    f"El joint mimic '{joint.name}' referencia una fuente inválida: "
                    f"'{joint.mimic.joint}'"
                )
            if source.mimic is not None or source.joint_type == "fixed":
                raise JointValidationError(
                    f"La fuente mimic '{source.name}' de '{joint.name}' debe ser un joint independiente"
                )
            if math.isnan(lower) or math.isnan(upper):
                a = joint.mimic.multiplier * source.limit_lower + joint.mimic.offset
                b = joint.mimic.multiplier * source.limit_upper + joint.mimic.offset
                lower, upper = min(a, b), max(a, b)
        if lower > upper:
            raise JointValidationError(
                f"El joint '{joint.name}' tiene límite inferior {lower} > superior {upper}"
            )
        resolved[joint.name] = replace(joint, axis=axis, limit_lower=lower, limit_upper=upper)

    children: Dict[str, List[JointSpec]] = {}
    for joint in joints:
        children.setdefault(joint.parent_link, []).append(resolved[joint.name])

    ordered_joints: List[JointSpec] = []
    ordered_links: List[LinkSpec] = [link_by_name[root]]
    parent_of: List[Optional[int]] = []
    visited = {root}

    def visit(link_name: str, via_joint: Optional[int]) -> None:
        # Hijos en orden de documento
        for joint in children.get(link_name, []):
            if joint.child_link in visited:
                raise KinematicStructureError(f"Ciclo detectado en el link '{joint.child_link}'")
            visited.add(joint.child_link)
            ordered_joints.append(joint)
            parent_of.append(via_joint)
            ordered_links.append(link_by_name[joint.child_link])
            visit(joint.child_link, len(ordered_joints) - 1)

    visit(root, None)

    if len(visited) != len(link_by_name):
        missing = sorted(set(link_by_name) - visited)
        raise KinematicStructureError(f"Links no alcanzables desde la raíz (ciclo): {missing}")

    return KinematicTree(
        name=name,
        root_link=root,
        joints=tuple(ordered_joints),
        links=tuple(ordered_links),
        parent_of=tuple(parent_of),
    )


# =============================================================================
# SERIALIZACIÓN
# =============================================================================


def tree_to_dict(tree: KinematicTree) -> Dict[str, Any]:
    """Serialización canónica con orden de campos estable."""
    return {
        "version": SERIALIZATION_VERSION,
        "name": tree.name,
        "root_link": tree.root_link,
        "joint_order": [j.name for j in tree.joints],
        "joints": [j.to_dict() for j in tree.joints],
        "links": [link.to_dict() for link in tree.links],
    }


def _fmt(values: Sequence[float]) -> str:
    return " ".join(repr(float(v)) for v in values)


def tree_to_urdf(tree: KinematicTree) -> str:
    """Escribe el árbol como URDF (colisiones como cajas)."""
    robot = ET.Element("robot", name=tree.name)
    for link in tree.links:
        link_el = ET.SubElement(robot, "link", name=link.name)
        if link.bbox_extents is not None:
            collision = ET.SubElement(link_el, "collision")
            ET.SubElement(
                collision,
                "origin",
                xyz=_fmt(link.bbox_offset.xyz),
                rpy=_fmt(link.bbox_offset.rpy),
            )
            geometry = ET.SubElement(collision, "geometry")
            ET.SubElement(geometry, "box", size=_fmt(link.bbox_extents))
    for joint in tree.joints:
        joint_el = ET.SubElement(robot, "joint", name=joint.name, type=joint.joint_type)
        ET.SubElement(joint_el, "parent", link=joint.parent_link)
        ET.SubElement(joint_el, "child", link=joint.child_link)
        ET.SubElement(joint_el, "origin", xyz=_fmt(joint.origin.xyz), rpy=_fmt(joint.origin.rpy))
        if joint.joint_type != "fixed":
            ET.SubElement(joint_el, "axis", xyz=_fmt(joint.axis))
            ET.SubElement(
                joint_el,
                "limit",
                lower=repr(float(joint.limit_lower)),
                upper=repr(float(joint.limit_upper)),
            )
        if joint.mimic is not None:
            ET.SubElement(
                joint_el,
                "mimic",
                joint=joint.mimic.joint,
                multiplier=repr(float(joint.mimic.multiplier)),
                offset=repr(float(joint.mimic.offset)),
            )
    ET.indent(robot)
    return ET.tostring(robot, encoding="unicode") + "\n"
