"""
Función de distancia con signo (SDF) de un objeto.

Con malla cerrada: distancia exacta punto-triángulo y signo por número de
arrollamiento generalizado (ángulo sólido de cada triángulo). Sin malla: se
proyecta sobre la normal del punto más cercano de la nube.

La búsqueda del triángulo más cercano se hace sin gradiente y por bloques;
el gradiente respecto a las consultas fluye solo por el triángulo elegido.
"""

import logging
import math
import weakref
from typing import Union

import numpy as np
import torch
import trimesh
from scipy.spatial import cKDTree

from py_morphgrasp.exceptions import CapabilityError, MeshValidationError
from py_morphgrasp.geometry.objects import ObjectModel

logger = logging.getLogger(__name__)

# Elementos (consulta x triángulo) por bloque en la búsqueda exhaustiva
CHUNK_ELEMENTS = 2_000_000
INSIDE_WINDING = 0.5


def _safe_div(num: torch.Tensor, den: torch.Tensor) -> torch.Tensor:
    # Evita NaN en ramas de torch.where que no se seleccionan
    small = den.abs() < 1e-30
    return num / torch.where(small, torch.ones_like(den), den)


def closest_point_on_triangles(
    p: torch.Tensor, a: torch.Tensor, b: torch.Tensor, c: torch.Tensor
) -> torch.Tensor:
    """
    Punto más cercano a p sobre el triángulo (a, b, c), por regiones de Voronoi.

    Todas las entradas se difunden entre sí con forma (..., 3).
    """
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = (ab * ap).sum(-1)
    d2 = (ac * ap).sum(-1)
    bp = p - b
    d3 = (ab * bp).sum(-1)
    d4 = (ac * bp).sum(-1)
    cp = p - c
    d5 = (ab * cp).sum(-1)
    d6 = (ac * cp).sum(-1)

    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    # Interior
    denom = va + vb + vc
    v = _safe_div(vb, denom)[..., None]
    w = _safe_div(vc, denom)[..., None]
    result = a + ab * v + ac * w

    # Arista BC
    bc_num = d4 - d3
    bc_w = _safe_div(bc_num, bc_num + (d5 - d6))[..., None]
    on_bc = (va <= 0) & (bc_num >= 0) & ((d5 - d6) >= 0)
    result = torch.where(on_bc[..., None], b + (c - b) * bc_w, result)

    # Arista AC
    ac_w = _safe_div(d2, d2 - d6)[..., None]
    on_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    result = torch.where(on_ac[..., None], a + ac * ac_w, result)

    # Vértice C
    at_c = (d6 >= 0) & (d5 <= d6)
    result = torch.where(at_c[..., None], c.expand_as(result), result)

    # Arista AB
    ab_v = _safe_div(d1, d1 - d3)[..., None]
    on_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    result = torch.where(on_ab[..., None], a + ab * ab_v, result)

    # Vértices B y A
    at_b = (d3 >= 0) & (d4 <= d3)
    result = torch.where(at_b[..., None], b.expand_as(result), result)
    at_a = (d1 <= 0) & (d2 <= 0)
    result = torch.where(at_a[..., None], a.expand_as(result), result)
    return result


def solid_angles(p: torch.Tensor, a: torch.Tensor, b: torch.Tensor, c: torch.Tensor) -> torch.Tensor:
    """Ángulo sólido con signo que subtiende cada triángulo visto desde p."""
    ra, rb, rc = a - p, b - p, c - p
    la, lb, lc = ra.norm(dim=-1), rb.norm(dim=-1), rc.norm(dim=-1)
    numerator = (ra * torch.linalg.cross(rb, rc)).sum(-1)
    denominator = (
        la * lb * lc
        + (ra * rb).sum(-1) * lc
        + (ra * rc).sum(-1) * lb
        + (rb * rc).sum(-1) * la
    )
    return 2.0 * torch.atan2(numerator, denominator)


class SignedDistance:
    """Interfaz común: ``sdf(queries)`` -> distancias con signo (q,)."""

    def __call__(self, queries: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def numpy(self, queries: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            values = self(torch.as_tensor(np.asarray(queries, dtype=np.float64).reshape(-1, 3)))
        return values.numpy()


class MeshSDF(SignedDistance):
    """
    SDF exacta de una malla cerrada.

    Raises:
        MeshValidationError: la malla no es watertight
    """

    def __init__(self, vertices: np.ndarray, triangles: np.ndarray, name: str = "mesh"):
        mesh = trimesh.Trimesh(vertices=vertices, faces=triangles, process=False)
        if not mesh.is_watertight:
            raise MeshValidationError(
                f"La malla de '{name}' no es cerrada: cada arista debe compartirse por dos triángulos"
            )
        corners = np.asarray(vertices, dtype=np.float64)[np.asarray(triangles, dtype=np.int64)]
        self.name = name
        self.corners = torch.as_tensor(corners)  # (F, 3, 3)
        self.n_triangles = len(corners)
        logger.debug(f"SDF de malla para '{name}': {self.n_triangles} triángulos")

    def _chunk(self) -> int:
        return max(1, CHUNK_ELEMENTS // max(self.n_triangles, 1))

    def nearest_triangles(self, queries: torch.Tensor) -> torch.Tensor:
        """Índice del triángulo más cercano a cada consulta (sin gradiente)."""
        a, b, c = (self.corners[None, :, k, :] for k in range(3))
        parts = []
        with torch.no_grad():
            for start in range(0, len(queries), self._chunk()):
                q = queries[start : start + self._chunk(), None, :].to(torch.float64)
                closest = closest_point_on_triangles(q, a, b, c)
                parts.append(((closest - q) ** 2).sum(-1).argmin(dim=1))
        return torch.cat(parts) if parts else torch.zeros(0, dtype=torch.long)

    def winding_numbers(self, queries: torch.Tensor) -> torch.Tensor:
        """Número de arrollamiento generalizado de la malla en cada consulta."""
        a, b, c = (self.corners[None, :, k, :] for k in range(3))
        parts = []
        with torch.no_grad():
            for start in range(0, len(queries), self._chunk()):
                q = queries[start : start + self._chunk(), None, :].to(torch.float64)
                parts.append(solid_angles(q, a, b, c).sum(dim=1) / (4.0 * math.pi))
        return torch.cat(parts) if parts else torch.zeros(0, dtype=torch.float64)

    def __call__(self, queries: torch.Tensor) -> torch.Tensor:
        queries = queries.reshape(-1, 3)
        index = self.nearest_triangles(queries.detach())
        tri = self.corners[index].to(queries.dtype)
        closest = closest_point_on_triangles(queries, tri[:, 0], tri[:, 1], tri[:, 2])
        squared = ((queries - closest) ** 2).sum(-1)
        distance = torch.sqrt(squared.clamp_min(1e-24))
        inside = self.winding_numbers(queries.detach()).abs() >= INSIDE_WINDING
        return torch.where(inside, -distance, distance)


class PointCloudSDF(SignedDistance):
    """Aproximación con nube y normales: (q - p) · n del punto más cercano."""

    def __init__(self, points: np.ndarray, normals: np.ndarray, name: str = "cloud"):
        self.name = name
        self.kdtree = cKDTree(points)
        self.points = torch.as_tensor(points, dtype=torch.float64)
        self.normals = torch.as_tensor(normals, dtype=torch.float64)

    def __call__(self, queries: torch.Tensor) -> torch.Tensor:
        queries = queries.reshape(-1, 3)
        _, index = self.kdtree.query(queries.detach().cpu().numpy())
        index = torch.as_tensor(np.atleast_1d(index), dtype=torch.long)
        p = self.points[index].to(queries.dtype)
        n = self.normals[index].to(queries.dtype)
        return ((queries - p) * n).sum(-1)


_SDF_CACHE: "weakref.WeakKeyDictionary[ObjectModel, SignedDistance]" = weakref.WeakKeyDictionary()


def object_sdf(obj: ObjectModel) -> SignedDistance:
    """
    SDF del objeto, construida una vez y compartida (solo lectura).

    Raises:
        CapabilityError: sin malla ni normales
        MeshValidationError: la malla no es cerrada
    """
    cached = _SDF_CACHE.get(obj)
    if cached is not None:
        return cached
    if obj.has_mesh:
        sdf: SignedDistance = MeshSDF(obj.vertices, obj.triangles, name=obj.name)
    elif obj.normals is not None:
        logger.debug(f"'{obj.name}' sin malla: SDF aproximada con normales")
        sdf = PointCloudSDF(obj.points, obj.normals, name=obj.name)
    else:
        raise CapabilityError(
            f"El objeto '{obj.name}' no tiene malla ni normales: no se puede evaluar la SDF"
        )
    _SDF_CACHE[obj] = sdf
    return sdf


def signed_distance(
    obj: ObjectModel, queries: Union[np.ndarray, torch.Tensor]
) -> Union[np.ndarray, torch.Tensor]:
    """
    Distancias con signo (negativas dentro) de las consultas al objeto.

    Devuelve un tensor diferenciable si ``queries`` es un tensor y un array
    numpy en otro caso.

    Example:
        >>> sphere = sphere_object(1.0)
        >>> signed_distance(sphere, np.array([[0.5, 0, 0], [2.0, 0, 0]]))
        array([-0.5..., 1.0...])
    """
    sdf = object_sdf(obj)
    if isinstance(queries, torch.Tensor):
        return sdf(queries)
    return sdf.numpy(queries)
