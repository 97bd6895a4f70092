"""
Red de denoising consciente de la morfología.

Embebe la pose ruidosa (33 canales) y la máscara δ, y la refina con B bloques
condicionados por el timestep, con cross-attention sobre la morfología M y
sobre la nube de puntos P.
"""

import logging
import math
from typing import Optional, Union

import torch
import torch.nn as nn
import torch.nn.functional as F

from py_morphgrasp.exceptions import ArityError, NumericError, TimestepRangeError
from py_morphgrasp.hand.canonical import N_SLOTS, POSE_DIM

logger = logging.getLogger(__name__)


def sinusoidal_features(timesteps: torch.Tensor, dim: int, max_period: float = 10000.0) -> torch.Tensor:
    """
    Rasgos sinusoidales [cos, sin] de los timesteps: (b,) -> (b, dim).

    freq_k = exp(-ln(max_period) * k / (dim/2)), k = 0 .. dim/2 - 1.
    """
    half = dim // 2
    freqs = torch.exp(-math.log(max_period) * torch.arange(half, dtype=torch.float64) / half)
    args = timesteps.to(torch.float64)[:, None] * freqs[None]
    embedding = torch.cat([torch.cos(args), torch.sin(args)], dim=-1)
    if dim % 2:
        embedding = torch.cat([embedding, torch.zeros_like(embedding[:, :1])], dim=-1)
    return embedding


class TimestepEmbedding(nn.Module):
    """Rasgos sinusoidales seguidos de una MLP de dos capas."""

    def __init__(self, feat_size: int, num_steps: int):
        super().__init__()
        self.feat_size = feat_size
        self.num_steps = num_steps
        self.mlp = nn.Sequential(
            nn.Linear(feat_size, feat_size),
            nn.SiLU(),
            nn.Linear(feat_size, feat_size),
        )

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        t = torch.as_tensor(t).reshape(-1)
        if torch.any((t < 0) | (t >= self.num_steps)):
            raise TimestepRangeError(f"Timestep fuera de [0, {self.num_steps}): {t.tolist()}")
        dtype = self.mlp[0].weight.dtype
        return self.mlp(sinusoidal_features(t, self.feat_size).to(dtype))


class CrossAttention(nn.Module):
    """Atención de una sola query (el token de la mano) sobre un conjunto de claves."""

    def __init__(self, feat_size: int, num_heads: int = 1):
        super().__init__()
        if feat_size % num_heads != 0:
            raise ArityError(f"feat_size ({feat_size}) debe ser divisible por num_heads ({num_heads})")
        self.num_heads = num_heads
        self.head_dim = feat_size // num_heads
        self.w_q = nn.Linear(feat_size, feat_size, bias=False)
        self.w_k = nn.Linear(feat_size, feat_size, bias=False)
        self.w_v = nn.Linear(feat_size, feat_size, bias=False)

    def weights(self, h: torch.Tensor, keys: torch.Tensor) -> torch.Tensor:
        """Pesos softmax (b, heads, n)."""
        b, n, _ = keys.shape
        q = self.w_q(h).reshape(b, self.num_heads, 1, self.head_dim)
        k = self.w_k(keys).reshape(b, n, self.num_heads, self.head_dim).transpose(1, 2)
        scores = (q @ k.transpose(-1, -2)).squeeze(-2) / math.sqrt(self.head_dim)
        return F.softmax(scores, dim=-1)

    def forward(self, h: torch.Tensor, keys: torch.Tensor) -> torch.Tensor:
        b, n, d = keys.shape
        v = self.w_v(keys).reshape(b, n, self.num_heads, self.head_dim).transpose(1, 2)
        out = (self.weights(h, keys)[..., None, :] @ v).squeeze(-2)
        return out.reshape(b, d)


class DenoiseBlock(nn.Module):
    """conv residual + timestep, cross-attention a M, cross-attention a P y FFN."""

    def __init__(self, feat_size: int, num_heads: int = 1, ffn_mult: int = 2, use_morphology: bool = True):
        super().__init__()
        self.use_morphology = use_morphology
        self.conv = nn.Conv1d(feat_size, feat_size, kernel_size=1)
        self.morph_attention = CrossAttention(feat_size, num_heads)
        self.point_attention = CrossAttention(feat_size, num_heads)
        self.ffn = nn.Sequential(
            nn.Linear(feat_size, ffn_mult * feat_size),
            nn.GELU(),
            nn.Linear(ffn_mult * feat_size, feat_size),
        )

    def forward(self, h, M, P, temb):
        h_conv = h + self.conv(h[..., None]).squeeze(-1) + temb
        h_m = h_conv + self.morph_attention(h_conv, M) if self.use_morphology else h_conv
        h_p = h_m + self.point_attention(h_m, P)
        return h_p + self.ffn(h_p)


class MorphDenoiser(nn.Module):
    """
    ε_φ(x_t, δ, M, P, t) -> ε̂ (b, 33).

    Example:
        >>> denoiser = MorphDenoiser(feat_size=256, num_blocks=8, num_steps=100)
        >>> eps_hat = denoiser(x_t, delta, M, P, t)
    """

    def __init__(
        self,
        feat_size: int = 256,
        num_blocks: int = 8,
        num_steps: int = 100,
        num_heads: int = 1,
        ffn_mult: int = 2,
        use_morphology: bool = True,
    ):
        super().__init__()
        if feat_size % 2:
            raise ArityError(f"feat_size debe ser par (recibido {feat_size})")
        self.feat_size = feat_size
        self.pose_embed = nn.Linear(POSE_DIM, feat_size // 2)
        self.mask_embed = nn.Linear(N_SLOTS, feat_size // 2)
        self.timestep_embed = TimestepEmbedding(feat_size, num_steps)
        self.blocks = nn.ModuleList(
            [DenoiseBlock(feat_size, num_heads, ffn_mult, use_morphology) for _ in range(num_blocks)]
        )
        self.head = nn.Linear(feat_size, POSE_DIM)

    def embed_pose(self, x_t: torch.Tensor, delta: torch.Tensor) -> torch.Tensor:
        if x_t.shape[-1] != POSE_DIM or delta.shape[-1] != N_SLOTS:
            raise ArityError(f"Formas inválidas: x_t {tuple(x_t.shape)}, δ {tuple(delta.shape)}")
        return torch.cat([self.pose_embed(x_t), self.mask_embed(delta.to(x_t.dtype))], dim=-1)

    def block(self, index: int, h, M, P, temb):
        out = self.blocks[index](h, M, P, temb)
        if not torch.isfinite(out).all():
            raise NumericError(f"Valor no finito en el bloque {index} del denoiser", where=index)
        return out

    def forward(
        self,
        x_t: torch.Tensor,
        delta: torch.Tensor,
        M: torch.Tensor,
        P: torch.Tensor,
        t: Union[int, torch.Tensor],
    ) -> torch.Tensor:
        """
        Args:
            x_t: Pose ruidosa (b, 33)
            delta: Máscara (b, 24)
            M: Morfología (b, 24, D)
            P: Rasgos de la nube (b, N_p, D)
            t: Timesteps (b,) o un entero común a todo el batch
        """
        b = x_t.shape[0]
        t = torch.as_tensor(t, dtype=torch.long).reshape(-1)
        if t.numel() == 1 and b > 1:
            t = t.expand(b)
        temb = self.timestep_embed(t)
        h = self.embed_pose(x_t, delta)
        for i in range(len(self.blocks)):
            h = self.block(i, h, M, P, temb)
        return self.head(h)


# Formas funcionales de las operaciones de la red


def embed_pose(x_t: torch.Tensor, delta: torch.Tensor, denoiser: MorphDenoiser) -> torch.Tensor:
    return denoiser.embed_pose(x_t, delta)


def timestep_embedding(t: Union[int, torch.Tensor], denoiser: MorphDenoiser) -> torch.Tensor:
    return denoiser.timestep_embed(torch.as_tensor(t, dtype=torch.long).reshape(-1))


def denoise_block(h, M, P, temb, denoiser: MorphDenoiser, block: int) -> torch.Tensor:
    return denoiser.block(block, h, M, P, temb)


def predict_noise(
    x_t: torch.Tensor,
    delta: torch.Tensor,
    M: torch.Tensor,
    P: torch.Tensor,
    t: Union[int, torch.Tensor],
    denoiser: MorphDenoiser,
    *,
    batch_size: Optional[int] = None,
) -> torch.Tensor:
    """ε̂ para un batch; ``batch_size`` trocea la evaluación sin mezclar muestras."""
    if batch_size is None or x_t.shape[0] <= batch_size:
        return denoiser(x_t, delta, M, P, t)
    t = torch.as_tensor(t, dtype=torch.long).reshape(-1)
    if t.numel() == 1:
        t = t.expand(x_t.shape[0])
    chunks = [
        denoiser(x_t[s : s + batch_size], delta[s : s + batch_size], M[s : s + batch_size],
                 P[s : s + batch_size], t[s : s + batch_size])
        for s in range(0, x_t.shape[0], batch_size)
    ]
    return torch.cat(chunks)
