"""
Maquinaria DDPM: programa de ruido, ruido directo, paso inverso y
canonicalización del frame del objeto.

El estado difundido es el vector continuo de 33 canales (t, r6, θ_c); δ es
solo condicionamiento.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np
import torch

from py_morphgrasp.config import ScheduleConfig
from py_morphgrasp.exceptions import DomainError, TimestepRangeError
from py_morphgrasp.geometry.objects import ObjectModel
from py_morphgrasp.hand.canonical import POSE_DIM, CanonicalPose
from py_morphgrasp.hand.rotation import IDENTITY_R6, rot6_to_matrix

logger = logging.getLogger(__name__)

# Extremos del programa lineal para T = 1000
BETA_START = 1e-4
BETA_END = 0.02
BETA_CAP = 0.999

ROTATION_CHANNELS = slice(3, 9)

Timesteps = Union[int, np.ndarray, torch.Tensor]


@dataclass(frozen=True, eq=False)
class DiffusionSchedule:
    """
    β_t, α_t, ᾱ_t y σ_t = √β_t.

    ``timesteps[i]`` es el índice del programa original con el que se
    condiciona la red en el paso i (la identidad salvo en programas
    reespaciados).
    """

    betas: np.ndarray
    timesteps: np.ndarray

    @property
    def T(self) -> int:
        return len(self.betas)

    @property
    def alphas(self) -> np.ndarray:
        return 1.0 - self.betas

    @property
    def alpha_bars(self) -> np.ndarray:
        return np.cumprod(self.alphas)

    @property
    def sigmas(self) -> np.ndarray:
        return np.sqrt(self.betas)

    @classmethod
    def linear(
        cls,
        steps: int = 100,
        beta_start: Optional[float] = None,
        beta_end: Optional[float] = None,
    ) -> "DiffusionSchedule":
        """
        Programa lineal. Sin extremos explícitos se escalan 1e-4 .. 0.02 por 1000/T.

        Example:
            >>> DiffusionSchedule.linear(100).betas[[0, -1]]
            array([0.001, 0.2  ])
        """
        if steps < 1:
            raise DomainError(f"El número de pasos debe ser >= 1 (recibido {steps})")
        scale = 1000.0 / steps
        start = beta_start if beta_start is not None else min(BETA_START * scale, BETA_CAP)
        end = beta_end if beta_end is not None else min(BETA_END * scale, BETA_CAP)
        if not 0.0 < start <= end < 1.0:
            raise DomainError(f"Extremos de β inválidos: {start} .. {end}")
        betas = np.linspace(start, end, steps, dtype=np.float64)
        return cls(betas=betas, timesteps=np.arange(steps))

    @classmethod
    def from_config(cls, schedule_config: ScheduleConfig) -> "DiffusionSchedule":
        return cls.linear(schedule_config.steps, schedule_config.beta_start, schedule_config.beta_end)

    def respaced(self, steps: int) -> "DiffusionSchedule":
        """
        Programa con ``steps`` < T pasos equiespaciados que conserva ᾱ en ellos.

        β'_i = 1 - ᾱ_{s_i} / ᾱ_{s_{i-1}}
        """
        if not 1 <= steps <= self.T:
            raise DomainError(f"Pasos reespaciados fuera de [1, {self.T}]: {steps}")
        if steps == self.T:
            return self
        kept = np.unique(np.round(np.linspace(0, self.T - 1, steps)).astype(np.int64))
        alpha_bars = self.alpha_bars[kept]
        previous = np.concatenate([[1.0], alpha_bars[:-1]])
        return DiffusionSchedule(betas=1.0 - alpha_bars / previous, timesteps=self.timesteps[kept])

    def check(self, t: Timesteps) -> np.ndarray:
        values = np.asarray(t.detach().cpu() if isinstance(t, torch.Tensor) else t).astype(np.int64)
        if np.any((values < 0) | (values >= self.T)):
            raise TimestepRangeError(f"Timestep fuera de [0, {self.T}): {values.tolist()}")
        return values

    def gather(self, table: np.ndarray, t: Timesteps, like: torch.Tensor) -> torch.Tensor:
        """Valores de la tabla en t con forma (b, 1) para difundir sobre los canales."""
        values = table[self.check(t)]
        return torch.as_tensor(values, dtype=like.dtype).reshape(-1, 1)


def forward_noise(
    x0: torch.Tensor, t: Timesteps, eps: torch.Tensor, schedule: DiffusionSchedule
) -> torch.Tensor:
    """x_t = √ᾱ_t x0 + √(1 - ᾱ_t) ε."""
    alpha_bar = schedule.gather(schedule.alpha_bars, t, x0)
    return torch.sqrt(alpha_bar) * x0 + torch.sqrt(1.0 - alpha_bar) * eps


def predict_x0(
    x_t: torch.Tensor, t: Timesteps, eps_hat: torch.Tensor, schedule: DiffusionSchedule
) -> torch.Tensor:
    """Identidad de reconstrucción: x̂0 = (x_t - √(1 - ᾱ_t) ε̂) / √ᾱ_t."""
    alpha_bar = schedule.gather(schedule.alpha_bars, t, x_t)
    return (x_t - torch.sqrt(1.0 - alpha_bar) * eps_hat) / torch.sqrt(alpha_bar)


def reverse_step(
    x_t: torch.Tensor,
    eps_hat: torch.Tensor,
    t: Timesteps,
    schedule: DiffusionSchedule,
    z: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """
    x_{t-1} = (x_t - β_t / √(1 - ᾱ_t) ε̂) / √α_t + σ_t z

    En t = 0 no se añade ruido.
    """
    steps = schedule.check(t)
    beta = schedule.gather(schedule.betas, steps, x_t)
    alpha = schedule.gather(schedule.alphas, steps, x_t)
    alpha_bar = schedule.gather(schedule.alpha_bars, steps, x_t)
    mean = (x_t - beta / torch.sqrt(1.0 - alpha_bar) * eps_hat) / torch.sqrt(alpha)
    if z is None:
        return mean
    sigma = schedule.gather(schedule.sigmas, steps, x_t)
    nonzero = torch.as_tensor(steps > 0, dtype=x_t.dtype).reshape(-1, 1)
    return mean + nonzero * sigma * z


def diffused_channels(canonicalize: bool) -> np.ndarray:
    """Canales que se difunden: en modo canónico la rotación queda fija."""
    channels = np.ones(POSE_DIM, dtype=bool)
    if canonicalize:
        channels[ROTATION_CHANNELS] = False
    return channels


def freeze_rotation(x: torch.Tensor) -> torch.Tensor:
    """Sustituye los canales de rotación por la codificación de la identidad."""
    identity = torch.as_tensor(IDENTITY_R6, dtype=x.dtype).expand(x.shape[0], 6)
    return torch.cat([x[:, :3], identity, x[:, 9:]], dim=1)


def canonicalize_frame(
    pose: CanonicalPose, obj: ObjectModel
) -> Tuple[CanonicalPose, ObjectModel]:
    """
    Expresa la escena en el frame de la mano: objeto rotado por R⁻¹, t' = R⁻¹ t.

    Raises:
        DegeneracyError: r6 degenerado

    Example:
        >>> canonical_pose, rotated = canonicalize_frame(pose, sphere)
        >>> canonical_pose.r6
        array([1., 0., 0., 0., 1., 0.])
    """
    R = rot6_to_matrix(pose.r6)
    rotated = obj.transformed(R.T)
    canonical_pose = replace(
        pose,
        t=R.T @ np.asarray(pose.t, dtype=np.float64),
        r6=np.asarray(IDENTITY_R6, dtype=np.float64).copy(),
    )
    return canonical_pose, rotated
