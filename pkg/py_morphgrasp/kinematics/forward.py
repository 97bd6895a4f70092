"""
Cinemática directa, muestreo de superficie y conteo de descendientes.

La cinemática directa se implementa una sola vez en torch (diferenciable y
vectorizada en el batch); la API numpy envuelve esa misma implementación en
float64.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch

from py_morphgrasp.exceptions import ArityError, GeometryError, JointLimitError
from py_morphgrasp.kinematics.urdf import KinematicTree

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LinkTransforms:
    """Transformaciones de cada link en el frame de la base de la mano."""

    link_names: Tuple[str, ...]
    rotations: np.ndarray  # (..., n_links, 3, 3)
    translations: np.ndarray  # (..., n_links, 3)

    def __len__(self) -> int:
        return len(self.link_names)

    def matrix(self, link: str) -> np.ndarray:
        i = self.link_names.index(link)
        T = np.zeros(self.rotations.shape[:-3] + (4, 4))
        T[..., :3, :3] = self.rotations[..., i, :, :]
        T[..., :3, 3] = self.translations[..., i, :]
        T[..., 3, 3] = 1.0
        return T

    def position(self, link: str) -> np.ndarray:
        return self.translations[..., self.link_names.index(link), :]


@dataclass(frozen=True, eq=False)
class SurfaceSamples:
    """
    Parametrización congelada de los puntos de superficie.

    Los puntos se guardan en el frame de su link; moverlos con la pose de la
    mano es una transformación rígida diferenciable.
    """

    local_points: np.ndarray  # (n, 3)
    link_index: np.ndarray  # (n,)
    face_index: np.ndarray  # (n,) eje * 2 + (0: cara negativa, 1: positiva)

    def __len__(self) -> int:
        return len(self.link_index)


@dataclass(frozen=True, eq=False)
class LabeledPoints:
    """Puntos en el frame de la base etiquetados con su link."""

    points: np.ndarray  # (n, 3)
    link_index: np.ndarray  # (n,)

    def __len__(self) -> int:
        return len(self.link_index)


class KinematicChain:
    """
    Cinemática directa vectorizada de un KinematicTree.

    child = parent @ origin @ motion(axis, q). Los joints mimic usan
    multiplier * q_source + offset.

    Example:
        >>> chain = KinematicChain(tree)
        >>> mats = chain.link_matrices(torch.zeros(tree.n_dof, dtype=torch.float64))
    """

    def __init__(self, tree: KinematicTree, dtype: torch.dtype = torch.float64):
        self.tree = tree
        self.dtype = dtype
        self.n_links = len(tree.links)
        self.n_dof = tree.n_dof

        column_of = {joint_index: col for col, joint_index in enumerate(tree.dof_indices)}
        by_name = {j.name: i for i, j in enumerate(tree.joints)}

        origins = [joint.origin.matrix() for joint in tree.joints]
        self.origins = torch.as_tensor(np.array(origins).reshape(-1, 4, 4), dtype=dtype)
        self.axes = torch.as_tensor(
            np.array([joint.axis for joint in tree.joints]).reshape(-1, 3), dtype=dtype
        )
        self.parent_link = [tree.link_index(j.parent_link) for j in tree.joints]
        self.child_link = [tree.link_index(j.child_link) for j in tree.joints]

        # (tipo, columna del GDL, multiplicador, offset)
        self.sources: List[Tuple[str, Optional[int], float, float]] = []
        for i, joint in enumerate(tree.joints):
            if joint.kind == "fixed":
                self.sources.append(("fixed", None, 0.0, 0.0))
            elif joint.kind == "mimic":
                source = by_name[joint.mimic.joint]
                motion = "prismatic" if joint.is_prismatic else "revolute"
                self.sources.append(
                    (motion, column_of[source], joint.mimic.multiplier, joint.mimic.offset)
                )
            else:
                self.sources.append((joint.kind, column_of[i], 1.0, 0.0))

        self.skews = torch.stack([_skew(a) for a in self.axes]) if len(tree.joints) else None

        extents = [link.bbox_extents or (0.0, 0.0, 0.0) for link in tree.links]
        self.box_extents = torch.as_tensor(np.array(extents), dtype=dtype)
        self.box_offsets = torch.as_tensor(
            np.array([link.bbox_offset.matrix() for link in tree.links]), dtype=dtype
        )

    def to(self, dtype: torch.dtype) -> "KinematicChain":
        return KinematicChain(self.tree, dtype=dtype)

    def joint_values(self, angles: torch.Tensor) -> List[Optional[torch.Tensor]]:
        """Valor de cada joint (None para los fijos) a partir de los GDL."""
        if angles.shape[-1] != self.n_dof:
            raise ArityError(
                f"Se esperaban {self.n_dof} ángulos para '{self.tree.name}', recibidos {angles.shape[-1]}"
            )
        values: List[Optional[torch.Tensor]] = []
        for kind, column, multiplier, offset in self.sources:
            if kind == "fixed":
                values.append(None)
            elif multiplier == 1.0 and offset == 0.0:
                values.append(angles[..., column])
            else:
                values.append(multiplier * angles[..., column] + offset)
        return values

    def _motion(self, j: int, q: torch.Tensor) -> torch.Tensor:
        batch = q.shape
        eye3 = torch.eye(3, dtype=self.dtype).expand(*batch, 3, 3)
        if self.sources[j][0] == "prismatic":
            rotation = eye3
            translation = self.axes[j] * q[..., None]
        else:
            K = self.skews[j]
            s = torch.sin(q)[..., None, None]
            c = torch.cos(q)[..., None, None]
            rotation = eye3 + s * K + (1.0 - c) * (K @ K)
            translation = torch.zeros(*batch, 3, dtype=self.dtype)
        top = torch.cat([rotation, translation[..., None]], dim=-1)
        bottom = torch.tensor([0.0, 0.0, 0.0, 1.0], dtype=self.dtype).expand(*batch, 1, 4)
        return torch.cat([top, bottom], dim=-2)

    def link_matrices(self, angles: torch.Tensor) -> torch.Tensor:
        """Matrices homogéneas (..., n_links, 4, 4) de todos los links."""
        angles = angles.to(self.dtype)
        batch = angles.shape[:-1]
        values = self.joint_values(angles)
        mats: List[Optional[torch.Tensor]] = [None] * self.n_links
        mats[0] = torch.eye(4, dtype=self.dtype).expand(*batch, 4, 4)
        # Orden DFS: el link padre siempre está resuelto antes que el hijo
        for j in range(len(self.sources)):
            T = mats[self.parent_link[j]] @ self.origins[j]
            if values[j] is not None:
                T = T @ self._motion(j, values[j])
            mats[self.child_link[j]] = T
        return torch.stack(mats, dim=-3)

    def transform_samples(self, link_mats: torch.Tensor, samples: SurfaceSamples) -> torch.Tensor:
        """Lleva los puntos muestreados al frame de la base: (..., n, 3)."""
        local = torch.as_tensor(samples.local_points, dtype=self.dtype)
        index = torch.as_tensor(samples.link_index, dtype=torch.long)
        rotations = link_mats[..., index, :3, :3]
        translations = link_mats[..., index, :3, 3]
        return torch.einsum("...nij,nj->...ni", rotations, local) + translations


def _skew(axis: torch.Tensor) -> torch.Tensor:
    x, y, z = axis
    zero = torch.zeros((), dtype=axis.dtype)
    return torch.stack(
        [
            torch.stack([zero, -z, y]),
            torch.stack([z, zero, -x]),
            torch.stack([-y, x, zero]),
        ]
    )


# =============================================================================
# API NUMPY
# =============================================================================


def check_joint_angles(
    tree: KinematicTree, angles: Sequence[float], clamp: bool = False
) -> np.ndarray:
    """
    Valida la aridad y los límites de los ángulos.

    Args:
        tree: Árbol cinemático
        angles: Un valor por GDL independiente, (n_dof,) o (batch, n_dof)
        clamp: Si True, recorta a los límites en lugar de fallar

    Raises:
        ArityError: número de ángulos distinto del número de GDL
        JointLimitError: ángulo fuera de límites en modo estricto
    """
    values = np.asarray(angles, dtype=np.float64)
    if values.ndim == 0 or values.shape[-1] != tree.n_dof:
        got = 0 if values.ndim == 0 else values.shape[-1]
        raise ArityError(f"Se esperaban {tree.n_dof} ángulos para '{tree.name}', recibidos {got}")

    lower = np.array([tree.joints[i].limit_lower for i in tree.dof_indices])
    upper = np.array([tree.joints[i].limit_upper for i in tree.dof_indices])
    if clamp:
        return np.clip(values, lower, upper)

    outside = (values < lower) | (values > upper)
    if np.any(outside):
        flat = np.argwhere(outside)[0]
        column = int(flat[-1])
        value = float(values[tuple(flat)])
        name = tree.dof_names[column]
        raise JointLimitError(
            f"El joint '{name}' está fuera de límites: {value:.6g} "
            f"no está en [{lower[column]:.6g}, {upper[column]:.6g}]"
        )
    return values


def forward_kinematics(
    tree: KinematicTree, angles: Sequence[float], clamp: bool = False
) -> LinkTransforms:
    """
    Calcula las transformaciones de todos los links.

    Args:
        tree: Árbol cinemático
        angles: Ángulos por GDL independiente, (n_dof,) o (batch, n_dof)
        clamp: Recorta a los límites en lugar de rechazar

    Returns:
        LinkTransforms en el frame de la base
    """
    values = check_joint_angles(tree, angles, clamp=clamp)
    chain = KinematicChain(tree)
    with torch.no_grad():
        mats = chain.link_matrices(torch.as_tensor(values, dtype=torch.float64)).numpy()
    return LinkTransforms(
        link_names=tree.link_names,
        rotations=mats[..., :3, :3].copy(),
        translations=mats[..., :3, 3].copy(),
    )


def allocate_by_area(areas: Sequence[float], n_points: int) -> np.ndarray:
    """Reparte n_points proporcionalmente al área (método del mayor resto)."""
    areas = np.asarray(areas, dtype=np.float64)
    total = float(areas.sum())
    if total <= 0.0:
        raise GeometryError("Todas las cajas de colisión tienen área nula")
    quotas = n_points * areas / total
    counts = np.floor(quotas).astype(np.int64)
    remainder = n_points - int(counts.sum())
    if remainder > 0:
        order = np.argsort(-(quotas - counts), kind="stable")
        counts[order[:remainder]] += 1
    return counts


def draw_surface_samples(tree: KinematicTree, n_points: int, seed: int) -> SurfaceSamples:
    """
    Muestrea puntos uniformes en área sobre las seis caras de cada caja.

    Raises:
        GeometryError: ninguna caja tiene área positiva
    """
    if n_points < 1:
        raise ValueError(f"n_points debe ser >= 1 (recibido {n_points})")
    rng = np.random.default_rng(seed)
    counts = allocate_by_area([link.surface_area for link in tree.links], n_points)

    local_parts, link_parts, face_parts = [], [], []
    for link_idx, (link, count) in enumerate(zip(tree.links, counts)):
        if count == 0:
            continue
        e = np.asarray(link.bbox_extents, dtype=np.float64)
        face_areas = np.array([e[1] * e[2]] * 2 + [e[0] * e[2]] * 2 + [e[0] * e[1]] * 2)
        faces = rng.choice(6, size=count, p=face_areas / face_areas.sum())
        box_points = rng.uniform(-0.5, 0.5, size=(count, 3)) * e
        axis = faces // 2
        sign = np.where(faces % 2 == 1, 0.5, -0.5)
        box_points[np.arange(count), axis] = sign * e[axis]

        offset = link.bbox_offset
        local_parts.append(box_points @ offset.rotation().T + np.asarray(offset.xyz))
        link_parts.append(np.full(count, link_idx, dtype=np.int64))
        face_parts.append(faces.astype(np.int64))

    return SurfaceSamples(
        local_points=np.concatenate(local_parts),
        link_index=np.concatenate(link_parts),
        face_index=np.concatenate(face_parts),
    )


def sample_hand_surface(
    tree: KinematicTree, transforms: LinkTransforms, n_points: int, seed: int
) -> LabeledPoints:
    """
    Puntos de superficie de la mano en el frame de la base.

    Example:
        >>> fk = forward_kinematics(tree, np.zeros(tree.n_dof))
        >>> labeled = sample_hand_surface(tree, fk, 512, seed=0)
    """
    samples = draw_surface_samples(tree, n_points, seed)
    R = transforms.rotations[samples.link_index]
    t = transforms.translations[samples.link_index]
    points = np.einsum("nij,nj->ni", R, samples.local_points) + t
    return LabeledPoints(points=points, link_index=samples.link_index)


def descendant_counts(tree: KinematicTree) -> np.ndarray:
    """
    Número de joints independientes estrictamente por debajo de cada GDL.

    Returns:
        Array (n_dof,) en el orden de ``tree.dof_indices``
    """
    counts = np.zeros(len(tree.joints), dtype=np.int64)
    for i, joint in enumerate(tree.joints):
        if not joint.is_independent:
            continue
        ancestor = tree.parent_of[i]
        while ancestor is not None:
            counts[ancestor] += 1
            ancestor = tree.parent_of[ancestor]
    return counts[list(tree.dof_indices)]
