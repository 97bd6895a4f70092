"""
Dataset sintético de agarres antipodales para la pinza de dos dedos.

Cada dedo es una cadena plana de dos links que gira alrededor de z. Los
ángulos se resuelven en forma cerrada para que la punta del link distal toque
la superficie del objeto con el link distal apuntando hacia dentro:

- Esfera: el segundo joint queda en la intersección de la circunferencia de
  radio L1 alrededor del montaje y la de radio r + L2 alrededor del centro.
- Caja: el link distal queda perpendicular a la cara, así que el segundo joint
  está a L2 de la cara y a L1 del montaje.

El segundo dedo es el reflejo del primero respecto al plano y = 0.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from py_morphgrasp.data.dataset import GraspDataset, GraspRecord
from py_morphgrasp.exceptions import GenerationError
from py_morphgrasp.geometry.objects import ObjectModel, box_object, sphere_object
from py_morphgrasp.hand.canonical import CanonicalPose, HandPose, to_canonical
from py_morphgrasp.hand.embodiment import Embodiment, load_builtin_embodiment
from py_morphgrasp.hand.rotation import matrix_to_rot6, rot6_to_matrix
from py_morphgrasp.kinematics.forward import forward_kinematics

logger = logging.getLogger(__name__)

TOY_EMBODIMENTS = ("toy_gripper",)
FINGER_CHAINS = ("thumb", "index")


@dataclass
class ToyConfig:
    """Objetos primitivos y tamaño del dataset sintético."""

    embodiment: str = "toy_gripper"
    n_grasps: int = 32
    sphere_radii: Tuple[float, ...] = (0.03, 0.025)
    box_extents: Tuple[Tuple[float, float, float], ...] = ((0.04, 0.05, 0.045),)
    cloud_points: int = 2048
    palm_clearance: float = 0.04
    standoff: float = 1e-7


@dataclass(frozen=True)
class GripperGeometry:
    """Medidas de la pinza leídas de su árbol cinemático."""

    mount: float  # |y| del montaje de cada dedo
    proximal: float  # L1
    distal: float  # L2 (hasta la punta)
    half_width: float  # semiancho del link distal
    limit: float
    finger_joints: Dict[str, Tuple[str, str]] = field(default_factory=dict)
    finger_sign: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_embodiment(cls, embodiment: Embodiment) -> "GripperGeometry":
        tree, mapping = embodiment.tree, embodiment.mapping
        finger_joints, finger_sign = {}, {}
        for chain in FINGER_CHAINS:
            joints = mapping.joints_in_chain(chain)
            if len(joints) != 2:
                raise GenerationError(
                    f"'{embodiment.name}' no es una pinza de dos dedos con dos joints por dedo"
                )
            finger_joints[chain] = joints
            finger_sign[chain] = math.copysign(1.0, tree.joint(joints[0]).origin.xyz[1])

        base, middle = (tree.joint(j) for j in finger_joints["thumb"])
        distal_link = tree.link(middle.child_link)
        return cls(
            mount=abs(base.origin.xyz[1]),
            proximal=float(middle.origin.xyz[0]),
            distal=float(distal_link.bbox_offset.xyz[0] + distal_link.bbox_extents[0] / 2),
            half_width=float(distal_link.bbox_extents[1] / 2),
            limit=min(abs(base.limit_lower), base.limit_upper, abs(middle.limit_lower), middle.limit_upper),
            finger_joints=finger_joints,
            finger_sign=finger_sign,
        )

    @property
    def span(self) -> float:
        return 2.0 * self.mount

    def _check_limits(self, theta1: float, theta2: float, what: str):
        if abs(theta1) > self.limit or abs(theta2) > self.limit:
            raise GenerationError(f"El agarre de {what} requiere ángulos fuera de límites")

    def sphere_grasp(self, radius: float, clearance: float, standoff: float = 0.0) -> Tuple[float, float, float]:
        """
        Ángulos (θ1, θ2) del dedo en +y y la x del centro de la esfera.

        Raises:
            GenerationError: las dos circunferencias no se cortan
        """
        cx = radius + clearance
        mx, my = 0.0, self.mount
        r1, r2 = self.proximal, radius + standoff + self.distal
        d = math.hypot(cx - mx, my)
        if d > r1 + r2 or d < abs(r1 - r2):
            raise GenerationError(
                f"La pinza (span {self.span:g}) no puede cerrar sobre una esfera de radio {radius:g}"
            )
        a = (r1**2 - r2**2 + d**2) / (2 * d)
        h = math.sqrt(max(r1**2 - a**2, 0.0))
        ux, uy = (cx - mx) / d, (0.0 - my) / d
        # Solución exterior (codo hacia fuera)
        px, py = mx + a * ux - h * uy, my + a * uy + h * ux
        theta1 = math.atan2(py - my, px - mx)
        theta2 = math.atan2(0.0 - py, cx - px) - theta1
        self._check_limits(theta1, theta2, f"la esfera de radio {radius:g}")
        return theta1, theta2, cx

    def box_grasp(self, extents: Sequence[float], standoff: float = 0.0) -> Tuple[float, float, float]:
        """
        Ángulos (θ1, θ2) con la punta en el centro de la cara +y y la x del centro.

        Args:
            extents: Extensiones de la caja en el frame de la mano

        Raises:
            GenerationError: el dedo no alcanza la cara o la caja choca con la palma
        """
        sx, sy = float(extents[0]), float(extents[1])
        dy = sy / 2 + standoff + self.distal - self.mount
        if abs(dy) >= self.proximal:
            raise GenerationError(f"La pinza no alcanza una caja de ancho {sy:g}")
        px = math.sqrt(self.proximal**2 - dy**2)
        if px - sx / 2 <= 0.0 or sx / 2 < self.half_width:
            raise GenerationError(f"La caja de fondo {sx:g} no cabe entre la palma y las puntas")
        theta1 = math.atan2(dy, px)
        theta2 = -math.pi / 2 - theta1
        self._check_limits(theta1, theta2, f"la caja {sx:g}x{sy:g}")
        return theta1, theta2, px

    def native_angles(self, embodiment: Embodiment, theta1: float, theta2: float) -> np.ndarray:
        """Ángulos por GDL (orden del árbol) con el segundo dedo reflejado."""
        by_joint = {}
        for chain, (j1, j2) in self.finger_joints.items():
            sign = self.finger_sign[chain]
            by_joint[j1], by_joint[j2] = sign * theta1, sign * theta2
        return np.array([by_joint[name] for name in embodiment.mapping.joint_names])


def axis_rotations() -> List[np.ndarray]:
    """Las 24 rotaciones propias que permutan los ejes coordenados."""
    rotations = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1.0, -1.0), repeat=3):
            R = np.zeros((3, 3))
            R[list(range(3)), list(perm)] = signs
            if np.linalg.det(R) > 0:
                rotations.append(R)
    return rotations


def _make_objects(toy_config: ToyConfig, seed: int) -> List[Tuple[str, ObjectModel, Tuple[float, ...]]]:
    objects = []
    for i, radius in enumerate(toy_config.sphere_radii):
        obj = sphere_object(radius, n_points=toy_config.cloud_points, seed=seed + i)
        objects.append(("sphere", obj, (radius,)))
    for i, extents in enumerate(toy_config.box_extents):
        obj = box_object(extents, n_points=toy_config.cloud_points, seed=seed + 100 + i)
        objects.append(("box", obj, tuple(extents)))
    return objects


def _place(R: np.ndarray, cx: float) -> np.ndarray:
    """t tal que el centro del objeto (cx, 0, 0) en la mano cae en el origen."""
    return -R @ np.array([cx, 0.0, 0.0])


def generate_toy_dataset(toy_config: Optional[ToyConfig] = None, seed: int = 0) -> GraspDataset:
    """
    Genera agarres antipodales analíticos sobre esferas y cajas.

    Los objetos se reparten de forma cíclica entre los registros. Las esferas
    usan una rotación aleatoria; las cajas, una de las 24 alineaciones con los
    ejes para que el dedo quede perpendicular a una cara.

    Raises:
        GenerationError: embodiment no soportado o agarre irresoluble

    Example:
        >>> dataset = generate_toy_dataset(ToyConfig(n_grasps=8), seed=0)
        >>> len(dataset)
        8
    """
    toy_config = toy_config or ToyConfig()
    if toy_config.embodiment not in TOY_EMBODIMENTS:
        raise GenerationError(f"Embodiment sin generador sintético: {toy_config.embodiment}")
    embodiment = load_builtin_embodiment(toy_config.embodiment)
    geometry = GripperGeometry.from_embodiment(embodiment)
    objects = _make_objects(toy_config, seed)
    if not objects:
        raise GenerationError("La configuración sintética no define objetos")

    logger.info(
        f"Generando {toy_config.n_grasps} agarres sintéticos sobre {len(objects)} objetos (semilla {seed})"
    )
    rng = np.random.default_rng(seed)
    candidates = axis_rotations()
    records = []
    for k in range(toy_config.n_grasps):
        object_index = k % len(objects)
        kind, _, params = objects[object_index]
        if kind == "sphere":
            R = Rotation.random(None, rng).as_matrix()
            theta1, theta2, cx = geometry.sphere_grasp(params[0], toy_config.palm_clearance, toy_config.standoff)
        else:
            theta1 = None
            last_error = None
            for choice in rng.permutation(len(candidates)):
                R = candidates[choice]
                try:
                    theta1, theta2, cx = geometry.box_grasp(np.abs(R).T @ np.asarray(params), toy_config.standoff)
                    break
                except GenerationError as ex:
                    last_error = ex
            if theta1 is None:
                raise GenerationError(f"Ninguna orientación de la caja {params} es agarrable: {last_error}")

        pose = HandPose(
            t=_place(R, cx),
            r6=matrix_to_rot6(R),
            theta=geometry.native_angles(embodiment, theta1, theta2),
        )
        records.append(GraspRecord(embodiment=0, object=object_index, pose=to_canonical(pose, embodiment.mapping)))
        logger.debug(f"Agarre {k}: {kind} θ1={theta1:.4f} θ2={theta2:.4f}")

    object_models = [obj for _, obj, _ in objects]
    return GraspDataset(
        embodiments=[embodiment],
        objects=object_models,
        records=records,
        splits={"train": [obj.name for obj in object_models]},
    )


def fingertip_positions(embodiment: Embodiment, pose: CanonicalPose) -> np.ndarray:
    """Puntas de los dos dedos (2, 3) en el frame del objeto."""
    geometry = GripperGeometry.from_embodiment(embodiment)
    theta = pose.theta_c[list(embodiment.mapping.slot_of)]
    fk = forward_kinematics(embodiment.tree, theta)
    R = rot6_to_matrix(pose.r6)
    tips = []
    for chain in FINGER_CHAINS:
        distal = embodiment.tree.joint(geometry.finger_joints[chain][1]).child_link
        frame = fk.matrix(distal)
        tip = frame[:3, :3] @ np.array([geometry.distal, 0.0, 0.0]) + frame[:3, 3]
        tips.append(R @ tip + pose.t)
    return np.array(tips)
