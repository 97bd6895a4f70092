"""
Pérdidas de entrenamiento.

- Pérdida morfológica con pesos por número de descendientes en el árbol.
- Reconstrucción del ruido (MSE).
- Pérdidas físicas sobre la superficie de la mano: atracción a la superficie
  (SPF), repulsión de penetración externa (ERF) y de autopenetración (SRF).

Todas las pérdidas físicas son funciones torch diferenciables respecto a los
puntos de la mano.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, Mapping, Optional, Tuple, Union

import numpy as np
import torch
from scipy.spatial import cKDTree

from py_morphgrasp.config import LossConfig
from py_morphgrasp.exceptions import DomainError, EmbodimentError, NumericError
from py_morphgrasp.geometry.objects import ObjectModel
from py_morphgrasp.geometry.sdf import signed_distance
from py_morphgrasp.hand.canonical import N_SLOTS, CanonicalMapping, CanonicalPose
from py_morphgrasp.kinematics.forward import LabeledPoints, descendant_counts
from py_morphgrasp.kinematics.urdf import KinematicTree

logger = logging.getLogger(__name__)

LOSS_TERMS = ("recon", "morph", "spf", "erf", "srf")
SRF_CHUNK_ROWS = 8

PointsLike = Union[torch.Tensor, np.ndarray, LabeledPoints]


# =============================================================================
# PÉRDIDA MORFOLÓGICA
# =============================================================================


@dataclass(frozen=True, eq=False)
class JointWeights:
    """w_i = √((c_i + 1) / G) en slots activos, 0 en los enmascarados."""

    w: np.ndarray
    G: float


def canonical_descendant_counts(tree: KinematicTree, mapping: CanonicalMapping) -> np.ndarray:
    """c por slot canónico (0 en los slots inactivos)."""
    counts = np.zeros(N_SLOTS, dtype=np.int64)
    per_dof = descendant_counts(tree)
    counts[list(mapping.slot_of)] = per_dof[[tree.dof_names.index(name) for name in mapping.joint_names]]
    return counts


def joint_weights(c: Iterable[int], delta: Iterable[int]) -> JointWeights:
    """
    Pesos adaptativos con media geométrica 1 sobre los joints activos.

    Raises:
        DomainError: ningún joint activo

    Example:
        >>> joint_weights([2, 1, 0], [1, 1, 1]).w
        array([1.28489..., 1.04911..., 0.74183...])
    """
    c = np.asarray(list(c), dtype=np.float64)
    active = np.asarray(list(delta), dtype=bool)
    if not active.any():
        raise DomainError("La máscara no tiene joints activos")
    G = float(np.exp(np.mean(np.log(c[active] + 1.0))))
    w = np.where(active, np.sqrt((c + 1.0) / G), 0.0)
    return JointWeights(w=w, G=G)


def morph_loss_rows(
    pred: torch.Tensor,
    target: torch.Tensor,
    weights: torch.Tensor,
    delta: torch.Tensor,
    include_rotation: bool = True,
) -> torch.Tensor:
    """‖t - t̂‖² + ‖r6 - r̂6‖² + Σ δ_i w_i (θ_i - θ̂_i)² por fila: (b, 33) -> (b,)."""
    diff = pred - target
    loss = (diff[:, :3] ** 2).sum(-1)
    if include_rotation:
        loss = loss + (diff[:, 3:9] ** 2).sum(-1)
    gate = delta.to(pred.dtype) * weights.to(pred.dtype)
    return loss + (gate * diff[:, 9:] ** 2).sum(-1)


def morph_loss(
    pred: Union[CanonicalPose, torch.Tensor],
    target: Union[CanonicalPose, torch.Tensor],
    weights: JointWeights,
    delta: Optional[np.ndarray] = None,
) -> torch.Tensor:
    """
    Pérdida morfológica entre dos poses canónicas.

    Raises:
        EmbodimentError: pred y target tienen máscaras distintas
    """
    if isinstance(pred, CanonicalPose):
        if not np.array_equal(pred.delta, target.delta):
            raise EmbodimentError("Las poses comparadas tienen máscaras δ distintas")
        delta = pred.delta
        pred = torch.as_tensor(pred.to_vector())[None]
        target = torch.as_tensor(target.to_vector())[None]
    if delta is None:
        raise DomainError("Se necesita δ para comparar vectores de pose")
    delta_t = torch.as_tensor(np.asarray(delta), dtype=pred.dtype).reshape(-1, N_SLOTS)
    w_t = torch.as_tensor(weights.w, dtype=pred.dtype)[None]
    return morph_loss_rows(pred, target, w_t, delta_t).mean()


# =============================================================================
# RECONSTRUCCIÓN
# =============================================================================


def recon_loss_rows(
    eps: torch.Tensor, eps_hat: torch.Tensor, channels: Optional[np.ndarray] = None
) -> torch.Tensor:
    """MSE por fila sobre los canales seleccionados."""
    diff = (eps_hat - eps) ** 2
    if channels is not None:
        diff = diff[:, torch.as_tensor(channels, dtype=torch.bool)]
    return diff.mean(-1)


def recon_loss(
    eps: torch.Tensor, eps_hat: torch.Tensor, channels: Optional[np.ndarray] = None
) -> torch.Tensor:
    """
    Error cuadrático medio entre el ruido y su predicción.

    Args:
        channels: Máscara booleana de 33 canales (None: todos)
    """
    eps = torch.as_tensor(eps).reshape(-1, eps.shape[-1])
    eps_hat = torch.as_tensor(eps_hat).reshape(-1, eps_hat.shape[-1])
    return recon_loss_rows(eps, eps_hat, channels).mean()


# =============================================================================
# PÉRDIDAS FÍSICAS
# =============================================================================


def _as_points(points: PointsLike) -> torch.Tensor:
    if isinstance(points, LabeledPoints):
        points = points.points
    if isinstance(points, torch.Tensor):
        return points.reshape(-1, 3)
    return torch.as_tensor(np.asarray(points, dtype=np.float64)).reshape(-1, 3)


def _object_cloud(obj: Union[ObjectModel, np.ndarray, torch.Tensor], like: torch.Tensor) -> torch.Tensor:
    cloud = obj.points if isinstance(obj, ObjectModel) else obj
    cloud = torch.as_tensor(np.asarray(cloud) if not isinstance(cloud, torch.Tensor) else cloud)
    cloud = cloud.to(like.dtype).reshape(-1, 3)
    if len(cloud) == 0:
        raise DomainError("La nube del objeto está vacía")
    return cloud


def nearest_distances(points: torch.Tensor, cloud: torch.Tensor) -> torch.Tensor:
    """d(p, O): distancia euclídea de cada punto al punto más cercano de la nube."""
    tree = cKDTree(cloud.detach().cpu().numpy())
    _, index = tree.query(points.detach().cpu().numpy())
    index = torch.as_tensor(index, dtype=torch.long)
    squared = ((points - cloud[index]) ** 2).sum(-1)
    return torch.sqrt(squared.clamp_min(1e-24))


def spf_loss_rows(
    points: torch.Tensor,
    obj: Union[ObjectModel, np.ndarray, torch.Tensor],
    loss_config: Optional[LossConfig] = None,
) -> torch.Tensor:
    """SPF por fila: puntos (k, n, 3) -> (k,)."""
    loss_config = loss_config or LossConfig()
    k, n = points.shape[:2]
    d = nearest_distances(points.reshape(-1, 3), _object_cloud(obj, points)).reshape(k, n)
    in_s = (d < loss_config.tau).to(points.dtype).detach()
    return (torch.sqrt(d) * in_s).sum(1) / (in_s.sum(1) + loss_config.eps_guard)


def spf_loss(
    points: PointsLike,
    obj: Union[ObjectModel, np.ndarray, torch.Tensor],
    loss_config: Optional[LossConfig] = None,
) -> torch.Tensor:
    """
    Atracción a la superficie: media de √d(p, O) sobre S = {p : d(p, O) < τ}.

    L = Σ_{p∈S} √d(p, O) / (|S| + ε)
    """
    return spf_loss_rows(_as_points(points)[None], obj, loss_config)[0]


def spf_membership(
    points: PointsLike, obj: Union[ObjectModel, np.ndarray, torch.Tensor], tau: float
) -> int:
    """|S|: número de puntos de la mano a menos de τ del objeto."""
    p = _as_points(points).detach()
    with torch.no_grad():
        d = nearest_distances(p, _object_cloud(obj, p))
    return int((d < tau).sum())


def erf_loss_rows(points: torch.Tensor, obj: ObjectModel) -> torch.Tensor:
    """ERF por fila: puntos (k, n, 3) -> (k,)."""
    k, n = points.shape[:2]
    sdf = signed_distance(obj, points.reshape(-1, 3)).reshape(k, n)
    return torch.relu(-sdf).mean(1)


def erf_loss(
    points: PointsLike, obj: ObjectModel, loss_config: Optional[LossConfig] = None
) -> torch.Tensor:
    """Penetración externa: (1/|P|) Σ max(0, -SDF_O(p))."""
    return erf_loss_rows(_as_points(points)[None], obj)[0]


def srf_pair_mask(
    link_index: np.ndarray,
    adjacency: Iterable[Tuple[int, int]] = (),
    exclude_adjacent: bool = True,
) -> Tuple[torch.Tensor, int]:
    """
    Pares no ordenados (i < j) de puntos en links distintos, sin los pares
    padre-hijo si ``exclude_adjacent``.

    Returns:
        Máscara booleana (n, n) y N_link (links distintos presentes)
    """
    labels = torch.as_tensor(np.asarray(link_index), dtype=torch.long)
    n_links = int(torch.unique(labels).numel())
    pairs = labels[:, None] != labels[None, :]
    pairs = pairs & torch.triu(torch.ones(len(labels), len(labels)), diagonal=1).bool()
    adjacency = list(adjacency)
    if exclude_adjacent and adjacency:
        size = max(int(labels.max()), max(max(pair) for pair in adjacency)) + 1
        adjacent = torch.zeros(size, size, dtype=torch.bool)
        for a, b in adjacency:
            adjacent[a, b] = adjacent[b, a] = True
        pairs = pairs & ~adjacent[labels][:, labels]
    return pairs, n_links


def srf_loss_rows(
    points: torch.Tensor,
    link_index: np.ndarray,
    loss_config: Optional[LossConfig] = None,
    adjacency: Iterable[Tuple[int, int]] = (),
) -> torch.Tensor:
    """SRF por fila: puntos (k, n, 3) con etiquetas compartidas -> (k,)."""
    loss_config = loss_config or LossConfig()
    pairs, n_links = srf_pair_mask(link_index, adjacency, loss_config.exclude_adjacent)
    if n_links < 2:
        return points.sum(dim=(1, 2)) * 0.0
    weight = pairs.to(points.dtype)
    rows = []
    # Trozos de filas: la matriz de pares ocupa k x n x n x 3
    for start in range(0, points.shape[0], SRF_CHUNK_ROWS):
        chunk = points[start : start + SRF_CHUNK_ROWS]
        squared = ((chunk[:, :, None, :] - chunk[:, None, :, :]) ** 2).sum(-1)
        dist = torch.sqrt(squared.clamp_min(1e-24))
        rows.append((torch.relu(loss_config.d_th - dist) * weight).sum(dim=(1, 2)))
    return torch.cat(rows) / n_links


def srf_loss(
    points: PointsLike,
    loss_config: Optional[LossConfig] = None,
    link_index: Optional[np.ndarray] = None,
    adjacency: Iterable[Tuple[int, int]] = (),
) -> torch.Tensor:
    """
    Autopenetración: (1/N_link) Σ max(0, d_th - ‖p_i - p_j‖) sobre pares no
    ordenados de puntos de links distintos y no adyacentes.

    Args:
        points: Puntos (n, 3) o LabeledPoints
        link_index: Link de cada punto (obligatorio si points no está etiquetado)
        adjacency: Pares (padre, hijo) de links que se excluyen si
            ``exclude_adjacent`` está activo
    """
    if isinstance(points, LabeledPoints):
        link_index = points.link_index
    if link_index is None:
        raise DomainError("srf_loss necesita el link de cada punto")
    return srf_loss_rows(_as_points(points)[None], link_index, loss_config, adjacency)[0]


# =============================================================================
# PÉRDIDA TOTAL
# =============================================================================


@dataclass
class LossReport:
    """Términos de la pérdida total ya reducidos a float."""

    recon: float
    morph: float
    spf: float
    erf: float
    srf: float
    total: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def total_loss(
    components: Mapping[str, torch.Tensor], loss_config: Optional[LossConfig] = None
) -> Tuple[torch.Tensor, LossReport]:
    """
    L = L_recon + L_m + α_spf L_spf + α_erf L_erf + α_srf L_srf

    Raises:
        NumericError: algún término no es finito (``where`` = nombre del término)

    Example:
        >>> total, report = total_loss({"recon": 1, "morph": 2, "spf": 3, "erf": 4, "srf": 5})
        >>> report.total
        15.0
    """
    loss_config = loss_config or LossConfig()
    values = {}
    for name in LOSS_TERMS:
        raw = components.get(name, 0.0)
        value = raw if isinstance(raw, torch.Tensor) else torch.tensor(float(raw), dtype=torch.float64)
        if not torch.isfinite(value.detach()).all():
            raise NumericError(f"La pérdida '{name}' no es finita", where=name)
        values[name] = value
    total = (
        values["recon"]
        + values["morph"]
        + loss_config.alpha_spf * values["spf"]
        + loss_config.alpha_erf * values["erf"]
        + loss_config.alpha_srf * values["srf"]
    )
    report = LossReport(
        total=float(total.detach()),
        **{name: float(values[name].detach()) for name in LOSS_TERMS},
    )
    return total, report
