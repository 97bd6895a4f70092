"""
Modelos de objeto: nube de puntos, normales opcionales y malla opcional.

Formatos soportados: XYZ ASCII ("x y z [nx ny nz]" por línea) y PLY (u otros
formatos de malla que entienda trimesh).
"""

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import trimesh

from py_morphgrasp.exceptions import DomainError, GeometryError

logger = logging.getLogger(__name__)

NORMAL_TOLERANCE = 1e-4


@dataclass(frozen=True, eq=False)
class ObjectModel:
    """Geometría de un objeto en metros."""

    name: str
    points: np.ndarray
    normals: Optional[np.ndarray] = None
    vertices: Optional[np.ndarray] = None
    triangles: Optional[np.ndarray] = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 3 or len(points) < 1:
            raise DomainError(f"El objeto '{self.name}' necesita al menos un punto (n, 3)")
        object.__setattr__(self, "points", points)
        if self.normals is not None:
            normals = np.asarray(self.normals, dtype=np.float64)
            if normals.shape != points.shape:
                raise GeometryError(f"Normales con forma {normals.shape}, se esperaba {points.shape}")
            norms = np.linalg.norm(normals, axis=1)
            if np.any(np.abs(norms - 1.0) > NORMAL_TOLERANCE):
                raise GeometryError(f"Las normales de '{self.name}' no son unitarias")
            object.__setattr__(self, "normals", normals)
        if (self.vertices is None) != (self.triangles is None):
            raise GeometryError("La malla necesita vértices y triángulos")
        if self.vertices is not None:
            object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=np.float64))
            object.__setattr__(self, "triangles", np.asarray(self.triangles, dtype=np.int64))

    @property
    def has_mesh(self) -> bool:
        return self.vertices is not None

    @property
    def n_points(self) -> int:
        return len(self.points)

    def mesh(self) -> trimesh.Trimesh:
        if not self.has_mesh:
            raise GeometryError(f"El objeto '{self.name}' no tiene malla")
        return trimesh.Trimesh(vertices=self.vertices, faces=self.triangles, process=False)

    def transformed(self, rotation: np.ndarray, translation: Sequence[float] = (0.0, 0.0, 0.0)) -> "ObjectModel":
        """Aplica x -> R x + t a puntos, normales y vértices."""
        R = np.asarray(rotation, dtype=np.float64)
        t = np.asarray(translation, dtype=np.float64)
        return replace(
            self,
            points=self.points @ R.T + t,
            normals=None if self.normals is None else self.normals @ R.T,
            vertices=None if self.vertices is None else self.vertices @ R.T + t,
        )

    def scaled(self, factor: float) -> "ObjectModel":
        return replace(
            self,
            points=self.points * factor,
            vertices=None if self.vertices is None else self.vertices * factor,
        )

    def resampled(self, n_points: int, seed: int = 0) -> "ObjectModel":
        """
        Nube de n_points puntos: de la superficie de la malla si existe,
        si no, submuestreo (con reemplazo cuando faltan puntos).
        """
        if self.has_mesh:
            mesh = self.mesh()
            points, face_index = trimesh.sample.sample_surface(mesh, n_points, seed=seed)
            normals = mesh.face_normals[face_index]
            return replace(self, points=np.asarray(points), normals=np.asarray(normals))
        rng = np.random.default_rng(seed)
        index = rng.choice(self.n_points, size=n_points, replace=n_points > self.n_points)
        return replace(
            self,
            points=self.points[index],
            normals=None if self.normals is None else self.normals[index],
        )


def _ply_normals(cloud) -> Optional[np.ndarray]:
    try:
        vertex = cloud.metadata["_ply_raw"]["vertex"]["data"]
        normals = np.stack([vertex["nx"], vertex["ny"], vertex["nz"]], axis=-1).astype(np.float64)
    except (KeyError, ValueError, TypeError):
        return None
    return normals.reshape(-1, 3)


def _normalize(normals: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if normals is None:
        return None
    norms = np.linalg.norm(normals, axis=1, keepdims=True)
    if np.any(norms < 1e-12):
        return None
    return normals / norms


def load_object(
    path: Union[str, Path],
    mesh_path: Optional[Union[str, Path]] = None,
    scale: float = 1.0,
    name: Optional[str] = None,
) -> ObjectModel:
    """
    Carga un objeto desde disco.

    Args:
        path: Nube (.xyz/.txt) o PLY/malla
        mesh_path: Malla cerrada opcional para las consultas SDF
        scale: Factor de escala aplicado a todo
        name: Identificador (por defecto, el nombre del archivo)

    Returns:
        ObjectModel
    """
    path = Path(path)
    name = name or path.stem
    vertices = triangles = normals = None

    if path.suffix.lower() in (".xyz", ".txt"):
        data = np.loadtxt(path, ndmin=2)
        if data.shape[1] not in (3, 6):
            raise DomainError(f"{path}: se esperaban 3 o 6 columnas por línea, hay {data.shape[1]}")
        points = data[:, :3]
        if data.shape[1] == 6:
            normals = data[:, 3:]
    else:
        loaded = trimesh.load(path, process=False)
        if isinstance(loaded, trimesh.Trimesh) and len(loaded.faces) > 0:
            vertices = np.asarray(loaded.vertices)
            triangles = np.asarray(loaded.faces)
            points = vertices
            normals = np.asarray(loaded.vertex_normals)
        else:
            points = np.asarray(loaded.vertices)
            normals = _ply_normals(loaded)

    if mesh_path is not None:
        mesh = trimesh.load(mesh_path, process=False, force="mesh")
        vertices, triangles = np.asarray(mesh.vertices), np.asarray(mesh.faces)

    obj = ObjectModel(
        name=name,
        points=points,
        normals=_normalize(normals),
        vertices=vertices,
        triangles=triangles,
    )
    if scale != 1.0:
        obj = obj.scaled(scale)
    logger.debug(f"Objeto '{name}' cargado: {obj.n_points} puntos, malla={obj.has_mesh}")
    return obj


def save_object_ply(obj: ObjectModel, path: Union[str, Path]) -> Path:
    """Escribe la malla (o la nube) como PLY."""
    path = Path(path)
    if obj.has_mesh:
        obj.mesh().export(path)
    else:
        trimesh.PointCloud(obj.points).export(path)
    return path


def sphere_object(radius: float, n_points: int = 2048, seed: int = 0, subdivisions: int = 3, name: Optional[str] = None) -> ObjectModel:
    """Esfera (icosfera) centrada en el origen con su nube muestreada."""
    mesh = trimesh.creation.icosphere(subdivisions=subdivisions, radius=radius)
    obj = ObjectModel(
        name=name or f"sphere_{radius:g}",
        points=np.asarray(mesh.vertices),
        vertices=np.asarray(mesh.vertices),
        triangles=np.asarray(mesh.faces),
    )
    return obj.resampled(n_points, seed=seed)


def box_object(extents: Sequence[float], n_points: int = 2048, seed: int = 0, name: Optional[str] = None) -> ObjectModel:
    """Caja centrada en el origen con su nube muestreada."""
    mesh = trimesh.creation.box(extents=extents)
    label = "x".join(f"{e:g}" for e in extents)
    obj = ObjectModel(
        name=name or f"box_{label}",
        points=np.asarray(mesh.vertices),
        vertices=np.asarray(mesh.vertices),
        triangles=np.asarray(mesh.faces),
    )
    return obj.resampled(n_points, seed=seed)
