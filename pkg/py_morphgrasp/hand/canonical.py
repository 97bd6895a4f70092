"""
Formato canónico de 24 slots para poses de mano.

Todas las manos se proyectan a la misma disposición: pulgar (5), índice (4),
medio (4), anular (4), meñique (5) y muñeca-palma (2). Un mapeo por mano
asigna cada GDL independiente a un slot; la máscara activa δ marca los slots
ocupados.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from py_morphgrasp.exceptions import EmbodimentError, MappingError
from py_morphgrasp.kinematics.urdf import KinematicTree

logger = logging.getLogger(__name__)

FINGERS = ("thumb", "index", "middle", "ring", "pinky")
CHAIN_NAMES = FINGERS + ("wrist",)
CHAIN_SIZES = (5, 4, 4, 4, 5, 2)
N_SLOTS = 24
POSE_DIM = 33  # t (3) + r6 (6) + θ_c (24)
MASK_BYTES = 3


@dataclass(frozen=True)
class CanonicalLayout:
    """Nombres de los slots y su padre dentro del árbol canónico."""

    slot_names: Tuple[str, ...]
    slot_parent: Tuple[Optional[int], ...]
    chains: Tuple[Tuple[str, Tuple[int, ...]], ...]

    @classmethod
    def default(cls) -> "CanonicalLayout":
        names: List[str] = []
        parents: List[Optional[int]] = []
        chains = []
        for chain, size in zip(CHAIN_NAMES, CHAIN_SIZES):
            start = len(names)
            for k in range(size):
                names.append(f"{chain}_{k}")
                parents.append(start + k - 1 if k > 0 else None)
            chains.append((chain, tuple(range(start, start + size))))
        return cls(slot_names=tuple(names), slot_parent=tuple(parents), chains=tuple(chains))

    def chain(self, name: str) -> Tuple[int, ...]:
        for chain_name, slots in self.chains:
            if chain_name == name:
                return slots
        raise KeyError(f"Cadena canónica desconocida: {name}")

    def chain_of(self, slot: int) -> str:
        for chain_name, slots in self.chains:
            if slot in slots:
                return chain_name
        raise KeyError(f"Slot fuera de rango: {slot}")

    def slot_index(self, name: str) -> int:
        try:
            return self.slot_names.index(name)
        except ValueError as ex:
            raise MappingError(f"Slot canónico desconocido: '{name}'") from ex


CANONICAL_LAYOUT = CanonicalLayout.default()


@dataclass(frozen=True)
class CanonicalMapping:
    """
    Asignación de los GDL independientes de una mano a slots canónicos.

    ``joint_names[k]`` es el k-ésimo GDL en el orden del árbol y
    ``slot_of[k]`` su slot.
    """

    embodiment_name: str
    joint_names: Tuple[str, ...]
    slot_of: Tuple[int, ...]

    def __post_init__(self):
        if len(self.joint_names) != len(self.slot_of):
            raise MappingError("joint_names y slot_of deben tener la misma longitud")
        if len(set(self.joint_names)) != len(self.joint_names):
            raise MappingError(f"Joint repetido en el mapeo de '{self.embodiment_name}'")
        if len(set(self.slot_of)) != len(self.slot_of):
            raise MappingError(f"Dos joints comparten slot en el mapeo de '{self.embodiment_name}'")
        for slot in self.slot_of:
            if not 0 <= slot < N_SLOTS:
                raise MappingError(f"Slot fuera de rango en '{self.embodiment_name}': {slot}")
        used = set(self.slot_of)
        for chain_name, slots in CANONICAL_LAYOUT.chains:
            occupied = [s for s in slots if s in used]
            if occupied != list(slots[: len(occupied)]):
                raise MappingError(
                    f"El mapeo de '{self.embodiment_name}' no ocupa un prefijo proximal "
                    f"contiguo de la cadena '{chain_name}'"
                )

    @property
    def n_joints(self) -> int:
        return len(self.joint_names)

    def slot_of_joint(self, joint: str) -> int:
        return self.slot_of[self.joint_names.index(joint)]

    def joints_in_chain(self, chain: str) -> Tuple[str, ...]:
        """Joints mapeados a una cadena, de proximal a distal."""
        slots = CANONICAL_LAYOUT.chain(chain)
        pairs = sorted((s, j) for j, s in zip(self.joint_names, self.slot_of) if s in slots)
        return tuple(j for _, j in pairs)

    def bind(self, tree: KinematicTree) -> "CanonicalMapping":
        """Reordena el mapeo según el orden de GDL del árbol y verifica la cobertura."""
        tree_joints = set(tree.dof_names)
        unknown = [j for j in self.joint_names if j not in tree_joints]
        if unknown:
            raise MappingError(
                f"El mapeo de '{self.embodiment_name}' referencia joints inexistentes o no "
                f"independientes: {unknown}"
            )
        missing = [j for j in tree.dof_names if j not in self.joint_names]
        if missing:
            raise MappingError(
                f"El mapeo de '{self.embodiment_name}' no asigna slot a los joints: {missing}"
            )
        slot_by_joint = dict(zip(self.joint_names, self.slot_of))
        return CanonicalMapping(
            embodiment_name=self.embodiment_name,
            joint_names=tree.dof_names,
            slot_of=tuple(slot_by_joint[j] for j in tree.dof_names),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "embodiment": self.embodiment_name,
            "entries": [
                {"joint": joint, "slot": CANONICAL_LAYOUT.slot_names[slot]}
                for joint, slot in zip(self.joint_names, self.slot_of)
            ],
        }

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "CanonicalMapping":
        if "entries" not in values:
            raise MappingError("El archivo de mapeo necesita la clave 'entries'")
        entries = values["entries"]
        return cls(
            embodiment_name=values.get("embodiment", "hand"),
            joint_names=tuple(e["joint"] for e in entries),
            slot_of=tuple(CANONICAL_LAYOUT.slot_index(e["slot"]) for e in entries),
        )


def load_mapping(
    path: Union[str, Path], tree: Optional[KinematicTree] = None
) -> CanonicalMapping:
    """Carga un archivo de mapeo JSON y, si se da el árbol, lo enlaza a él."""
    with open(path, encoding="utf-8") as f:
        mapping = CanonicalMapping.from_dict(json.load(f))
    logger.debug(f"Mapeo '{mapping.embodiment_name}' cargado: {mapping.n_joints} joints")
    return mapping.bind(tree) if tree is not None else mapping


def save_mapping(mapping: CanonicalMapping, path: Union[str, Path]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(mapping.to_dict(), f, indent=2)
    return path


# =============================================================================
# POSES
# =============================================================================


@dataclass(frozen=True, eq=False)
class HandPose:
    """Pose nativa de una mano: traslación, rotación 6-D y N ángulos."""

    t: np.ndarray
    r6: np.ndarray
    theta: np.ndarray


@dataclass(frozen=True, eq=False)
class CanonicalPose:
    """Pose canónica (t, r6, θ_c, δ)."""

    t: np.ndarray
    r6: np.ndarray
    theta_c: np.ndarray
    delta: np.ndarray

    def to_vector(self) -> np.ndarray:
        """Vector continuo de 33 canales (δ va aparte)."""
        return np.concatenate([self.t, self.r6, self.theta_c]).astype(np.float64)

    @classmethod
    def from_vector(cls, vector: Sequence[float], delta: Sequence[int]) -> "CanonicalPose":
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (POSE_DIM,):
            raise MappingError(f"Se esperaba un vector de {POSE_DIM} canales, forma {vector.shape}")
        return cls(
            t=vector[:3].copy(),
            r6=vector[3:9].copy(),
            theta_c=vector[9:].copy(),
            delta=np.asarray(delta, dtype=np.uint8).copy(),
        )

    def to_json_dict(self) -> Dict[str, List[float]]:
        return {
            "t": [float(v) for v in self.t],
            "r6": [float(v) for v in self.r6],
            "theta_c": [float(v) for v in self.theta_c],
            "delta": [int(v) for v in self.delta],
        }

    @classmethod
    def from_json_dict(cls, values: Mapping[str, Sequence[float]]) -> "CanonicalPose":
        return cls(
            t=np.asarray(values["t"], dtype=np.float64),
            r6=np.asarray(values["r6"], dtype=np.float64),
            theta_c=np.asarray(values["theta_c"], dtype=np.float64),
            delta=np.asarray(values["delta"], dtype=np.uint8),
        )

    def to_bytes(self) -> bytes:
        """33 float64 little-endian seguidos de la máscara empaquetada (3 bytes)."""
        return self.to_vector().astype("<f8").tobytes() + pack_mask(self.delta)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CanonicalPose":
        expected = POSE_DIM * 8 + MASK_BYTES
        if len(data) != expected:
            raise MappingError(f"Registro de pose de {len(data)} bytes, se esperaban {expected}")
        vector = np.frombuffer(data[: POSE_DIM * 8], dtype="<f8")
        return cls.from_vector(vector, unpack_mask(data[POSE_DIM * 8 :]))


def pack_mask(delta: Sequence[int]) -> bytes:
    bits = np.asarray(delta, dtype=np.uint8)
    return np.packbits(bits, bitorder="little").tobytes()


def unpack_mask(data: bytes) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    return bits[:N_SLOTS].astype(np.uint8)


# =============================================================================
# OPERACIONES
# =============================================================================


def active_mask(mapping: CanonicalMapping) -> np.ndarray:
    """δ[s] = 1 si algún joint fuente ocupa el slot s."""
    delta = np.zeros(N_SLOTS, dtype=np.uint8)
    delta[list(mapping.slot_of)] = 1
    return delta


def to_canonical(pose: HandPose, mapping: CanonicalMapping) -> CanonicalPose:
    """
    Proyecta una pose nativa al formato canónico.

    Raises:
        MappingError: el número de ángulos no coincide con el mapeo
    """
    theta = np.asarray(pose.theta, dtype=np.float64)
    if theta.shape != (mapping.n_joints,):
        raise MappingError(
            f"La pose tiene {theta.size} ángulos y el mapeo de '{mapping.embodiment_name}' "
            f"espera {mapping.n_joints}"
        )
    theta_c = np.zeros(N_SLOTS, dtype=np.float64)
    theta_c[list(mapping.slot_of)] = theta
    return CanonicalPose(
        t=np.array(pose.t, dtype=np.float64),
        r6=np.array(pose.r6, dtype=np.float64),
        theta_c=theta_c,
        delta=active_mask(mapping),
    )


def from_canonical(cpose: CanonicalPose, mapping: CanonicalMapping) -> HandPose:
    """
    Recupera la pose nativa de una pose canónica.

    Raises:
        EmbodimentError: δ no coincide con la máscara del mapeo, o hay ángulos
            no nulos en slots enmascarados
    """
    expected = active_mask(mapping)
    delta = np.asarray(cpose.delta, dtype=np.uint8)
    if not np.array_equal(delta, expected):
        raise EmbodimentError(
            f"La máscara de la pose no corresponde a '{mapping.embodiment_name}' "
            f"({int(delta.sum())} slots activos, se esperaban {int(expected.sum())})"
        )
    theta_c = np.asarray(cpose.theta_c, dtype=np.float64)
    if np.any(theta_c[expected == 0] != 0.0):
        raise EmbodimentError("La pose tiene ángulos no nulos en slots enmascarados")
    return HandPose(
        t=np.array(cpose.t, dtype=np.float64),
        r6=np.array(cpose.r6, dtype=np.float64),
        theta=theta_c[list(mapping.slot_of)].copy(),
    )


def zero_masked(theta_c: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Anula los canales articulares de los slots inactivos (vectorizado)."""
    return np.where(np.asarray(delta, dtype=bool), theta_c, 0.0)


def poses_to_json(poses: Iterable[CanonicalPose]) -> str:
    return json.dumps([p.to_json_dict() for p in poses], indent=2)


def poses_from_json(text: str) -> List[CanonicalPose]:
    values = json.loads(text)
    if isinstance(values, dict):
        values = values.get("poses", [])
    return [CanonicalPose.from_json_dict(v) for v in values]
