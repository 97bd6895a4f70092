"""
Codificador de morfología.

Construye la matriz J (24 x 11) de cada mano y la codifica con
self-attention sesgada por la estructura del árbol canónico (distancia en
saltos, padre, hijo) y por la máscara de slots activos.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from scipy.sparse.csgraph import shortest_path

from py_morphgrasp.exceptions import ArityError, FeatureError, NumericError
from py_morphgrasp.hand.canonical import CANONICAL_LAYOUT, N_SLOTS, CanonicalLayout, CanonicalMapping
from py_morphgrasp.kinematics.urdf import KinematicTree

logger = logging.getLogger(__name__)

FEATURE_NAMES = (
    "box_x", "box_y", "box_z",
    "limit_lower", "limit_upper",
    "origin_x", "origin_y", "origin_z",
    "axis_x", "axis_y", "axis_z",
)
FEATURE_DIM = len(FEATURE_NAMES)
UNREACHABLE = -1


def extract_joint_morphology(tree: KinematicTree, mapping: CanonicalMapping) -> np.ndarray:
    """
    Matriz J por slot: extensiones de la caja del link hijo, límites, origen y eje.

    Raises:
        FeatureError: un joint mapeado no tiene caja en su link hijo

    Example:
        >>> J = extract_joint_morphology(embodiment.tree, embodiment.mapping)
        >>> J.shape
        (24, 11)
    """
    J = np.zeros((N_SLOTS, FEATURE_DIM), dtype=np.float64)
    for joint_name, slot in zip(mapping.joint_names, mapping.slot_of):
        joint = tree.joint(joint_name)
        link = tree.link(joint.child_link)
        if link.bbox_extents is None:
            raise FeatureError(
                f"El joint '{joint_name}' no tiene caja de colisión en su link hijo '{link.name}'"
            )
        J[slot] = np.concatenate(
            [
                link.bbox_extents,
                [joint.limit_lower, joint.limit_upper],
                joint.origin.xyz,
                joint.axis,
            ]
        )
    return J


@dataclass(frozen=True, eq=False)
class GraphStructure:
    """Matrices estructurales del árbol canónico (24 x 24)."""

    adjacency: np.ndarray
    parent: np.ndarray  # parent[i, j] = 1 si j es padre de i
    child: np.ndarray  # child[i, j] = 1 si j es hijo de i
    spd: np.ndarray  # saltos; UNREACHABLE entre componentes distintas

    def permuted(self, order: Sequence[int]) -> "GraphStructure":
        """Reetiqueta los slots: el nuevo slot k es el antiguo order[k]."""
        index = np.asarray(order)
        grid = np.ix_(index, index)
        return GraphStructure(
            adjacency=self.adjacency[grid],
            parent=self.parent[grid],
            child=self.child[grid],
            spd=self.spd[grid],
        )


def build_graph_structure(layout: CanonicalLayout = CANONICAL_LAYOUT) -> GraphStructure:
    """Adyacencia, padre, hijo y distancias en saltos del layout canónico."""
    n = len(layout.slot_names)
    parent = np.zeros((n, n), dtype=np.int64)
    for i, p in enumerate(layout.slot_parent):
        if p is not None:
            parent[i, p] = 1
    child = parent.T.copy()
    adjacency = parent | child
    distances = shortest_path(adjacency.astype(np.float64), method="D", directed=False, unweighted=True)
    spd = np.where(np.isinf(distances), UNREACHABLE, distances).astype(np.int64)
    return GraphStructure(adjacency=adjacency, parent=parent, child=child, spd=spd)


class GraphBiasedAttention(nn.Module):
    """
    Self-attention multi-cabeza con sesgo estructural y de máscara.

    A_ij = q_i k_j / sqrt(D/h) + b_graph(i, j) + b_mask(δ_i, δ_j)
    """

    def __init__(
        self,
        feat_size: int,
        num_heads: int,
        max_hops: int,
        use_graph_bias: bool = True,
        hard_mask: bool = True,
        ffn_mult: int = 2,
    ):
        super().__init__()
        if feat_size % num_heads != 0:
            raise ArityError(f"feat_size ({feat_size}) debe ser divisible por num_heads ({num_heads})")
        self.feat_size = feat_size
        self.num_heads = num_heads
        self.head_dim = feat_size // num_heads
        self.max_hops = max_hops
        self.use_graph_bias = use_graph_bias
        self.hard_mask = hard_mask

        self.w_q = nn.Linear(feat_size, feat_size, bias=False)
        self.w_k = nn.Linear(feat_size, feat_size, bias=False)
        self.w_v = nn.Linear(feat_size, feat_size, bias=False)
        # Buckets 0..max_hops y uno extra para pares no alcanzables
        self.spd_embedding = nn.Embedding(max_hops + 2, num_heads)
        self.parent_bias = nn.Parameter(torch.zeros(num_heads))
        self.child_bias = nn.Parameter(torch.zeros(num_heads))
        self.mask_bias = nn.Parameter(torch.zeros(num_heads, 2, 2))
        self.ffn = nn.Sequential(
            nn.Linear(feat_size, ffn_mult * feat_size),
            nn.GELU(),
            nn.Linear(ffn_mult * feat_size, feat_size),
        )
        self.reset_parameters()

    def reset_parameters(self):
        nn.init.xavier_uniform_(self.w_q.weight, gain=2**-0.5)
        nn.init.xavier_uniform_(self.w_k.weight, gain=2**-0.5)
        nn.init.xavier_uniform_(self.w_v.weight, gain=2**-0.5)
        nn.init.normal_(self.spd_embedding.weight, std=0.02)

    def spd_buckets(self, spd: torch.Tensor) -> torch.Tensor:
        buckets = spd.clamp(max=self.max_hops)
        return torch.where(spd == UNREACHABLE, torch.full_like(spd, self.max_hops + 1), buckets)

    def graph_bias(self, spd: torch.Tensor, parent: torch.Tensor, child: torch.Tensor) -> torch.Tensor:
        """b_graph por cabeza: (h, 24, 24)."""
        spd_term = self.spd_embedding(self.spd_buckets(spd)).permute(2, 0, 1)
        return (
            spd_term
            + self.parent_bias[:, None, None] * parent
            + self.child_bias[:, None, None] * child
        )

    def mask_term(self, delta: torch.Tensor) -> torch.Tensor:
        """b_mask(δ_i, δ_j) por cabeza: (b, h, 24, 24)."""
        d = delta.long()
        table = self.mask_bias[:, d[:, :, None], d[:, None, :]]  # (h, b, n, n)
        return table.permute(1, 0, 2, 3)

    def scores(
        self,
        x: torch.Tensor,
        delta: torch.Tensor,
        spd: torch.Tensor,
        parent: torch.Tensor,
        child: torch.Tensor,
    ) -> torch.Tensor:
        """Puntuaciones (b, h, n, n) antes del softmax."""
        b, n, _ = x.shape
        q = self.w_q(x).reshape(b, n, self.num_heads, self.head_dim).transpose(1, 2)
        k = self.w_k(x).reshape(b, n, self.num_heads, self.head_dim).transpose(1, 2)
        attn = q @ k.transpose(-1, -2) / np.sqrt(self.head_dim)
        if self.use_graph_bias:
            attn = attn + self.graph_bias(spd, parent, child)[None]
        attn = attn + self.mask_term(delta)
        if self.hard_mask:
            inactive = (delta <= 0) & (delta.sum(dim=-1, keepdim=True) > 0)
            attn = attn.masked_fill(inactive[:, None, None, :], float("-inf"))
        return attn

    def forward(self, x, delta, spd, parent, child):
        b, n, _ = x.shape
        weights = F.softmax(self.scores(x, delta, spd, parent, child), dim=-1)
        v = self.w_v(x).reshape(b, n, self.num_heads, self.head_dim).transpose(1, 2)
        heads = (weights @ v).transpose(1, 2).reshape(b, n, self.feat_size)
        h = x + heads
        return h + self.ffn(h)


class MorphologyEncoder(nn.Module):
    """
    Proyección de tokens 11 -> D y L capas de atención sesgada.

    Example:
        >>> encoder = MorphologyEncoder(feat_size=256, num_layers=4, num_heads=8)
        >>> M = encoder(torch.as_tensor(J)[None].float(), torch.as_tensor(delta)[None])
    """

    def __init__(
        self,
        feat_size: int = 256,
        num_layers: int = 4,
        num_heads: int = 8,
        max_hops: int = 8,
        use_graph_bias: bool = True,
        hard_mask: bool = True,
        standardize: bool = False,
        ffn_mult: int = 2,
        structure: Optional[GraphStructure] = None,
    ):
        super().__init__()
        self.feat_size = feat_size
        self.hard_mask = hard_mask
        self.standardize = standardize
        self.token_projection = nn.Linear(FEATURE_DIM, feat_size)
        self.layers = nn.ModuleList(
            [
                GraphBiasedAttention(feat_size, num_heads, max_hops, use_graph_bias, hard_mask, ffn_mult)
                for _ in range(num_layers)
            ]
        )
        self.register_buffer("feature_mean", torch.zeros(FEATURE_DIM))
        self.register_buffer("feature_std", torch.ones(FEATURE_DIM))
        self.set_structure(structure or build_graph_structure())

    def set_structure(self, structure: GraphStructure):
        self.register_buffer("spd", torch.as_tensor(structure.spd, dtype=torch.long), persistent=False)
        self.register_buffer("parent", torch.as_tensor(structure.parent, dtype=torch.float32), persistent=False)
        self.register_buffer("child", torch.as_tensor(structure.child, dtype=torch.float32), persistent=False)

    def fit_standardization(self, matrices: Sequence[np.ndarray], masks: Sequence[np.ndarray]):
        """Media y desviación por columna sobre las filas activas de las manos dadas."""
        rows = np.concatenate(
            [np.asarray(J)[np.asarray(d, dtype=bool)] for J, d in zip(matrices, masks)]
        )
        std = rows.std(axis=0)
        std[std < 1e-8] = 1.0
        self.feature_mean.copy_(torch.as_tensor(rows.mean(axis=0)))
        self.feature_std.copy_(torch.as_tensor(std))
        logger.debug(f"Estandarización de J ajustada sobre {len(rows)} filas activas")

    def prepare(self, J: torch.Tensor, delta: torch.Tensor) -> torch.Tensor:
        if not self.standardize:
            return J
        active = delta.to(J.dtype)[..., None]
        return (J - self.feature_mean.to(J.dtype)) / self.feature_std.to(J.dtype) * active

    def attention_scores(self, J: torch.Tensor, delta: torch.Tensor, layer: int) -> torch.Tensor:
        """Puntuaciones de la capa ``layer`` para (J, δ)."""
        x = self.token_projection(self.prepare(J, delta))
        for i in range(layer):
            x = self._layer(i, x, delta)
        block = self.layers[layer]
        return block.scores(x, delta, self.spd, self.parent.to(x.dtype), self.child.to(x.dtype))

    def _layer(self, i: int, x: torch.Tensor, delta: torch.Tensor) -> torch.Tensor:
        x = self.layers[i](x, delta, self.spd, self.parent.to(x.dtype), self.child.to(x.dtype))
        if not torch.isfinite(x).all():
            raise NumericError(f"Valor no finito en la capa {i} del codificador de morfología", where=i)
        return x

    def forward(self, J: torch.Tensor, delta: torch.Tensor) -> torch.Tensor:
        """(b, 24, 11), (b, 24) -> (b, 24, D)."""
        if J.shape[-2:] != (N_SLOTS, FEATURE_DIM) or delta.shape[-1] != N_SLOTS:
            raise ArityError(f"Formas inválidas: J {tuple(J.shape)}, δ {tuple(delta.shape)}")
        x = self.token_projection(self.prepare(J, delta))
        for i in range(len(self.layers)):
            x = self._layer(i, x, delta)
        if self.hard_mask:
            x = x * delta.to(x.dtype)[..., None]
        return x


def attention_scores(
    encoder: MorphologyEncoder,
    X: torch.Tensor,
    structure: GraphStructure,
    delta: torch.Tensor,
    layer: int,
) -> torch.Tensor:
    """
    Puntuaciones de atención de una capa sobre tokens ya proyectados.

    Raises:
        ArityError: formas incoherentes entre X, δ y la estructura
    """
    n = structure.spd.shape[0]
    if X.shape[-2] != n or delta.shape[-1] != n or X.shape[-1] != encoder.feat_size:
        raise ArityError(
            f"Formas inválidas: X {tuple(X.shape)}, δ {tuple(delta.shape)}, estructura {n}x{n}"
        )
    return encoder.layers[layer].scores(
        X,
        delta,
        torch.as_tensor(structure.spd, dtype=torch.long),
        torch.as_tensor(structure.parent, dtype=X.dtype),
        torch.as_tensor(structure.child, dtype=X.dtype),
    )


def encode_morphology(
    J: torch.Tensor,
    structure: GraphStructure,
    delta: torch.Tensor,
    encoder: MorphologyEncoder,
) -> torch.Tensor:
    """Codifica J con la estructura dada (restaura la del encoder al terminar)."""
    saved = (encoder.spd, encoder.parent, encoder.child)
    encoder.set_structure(structure)
    try:
        return encoder(J, delta)
    finally:
        encoder.spd, encoder.parent, encoder.child = saved
