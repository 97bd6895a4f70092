"""
Muestreo de agarres con el proceso inverso.

x_T ~ N(0, I), pasos inversos con ε̂ del modelo desde T-1 hasta 0 y
decodificación a poses canónicas con los slots inactivos a cero.
"""

import json
import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import torch
from scipy.spatial.transform import Rotation

from py_morphgrasp import config
from py_morphgrasp.config import LossConfig
from py_morphgrasp.core.diffusion import DiffusionSchedule, diffused_channels, freeze_rotation, reverse_step
from py_morphgrasp.core.metrics import diversity, grasp_quality
from py_morphgrasp.core.reports import export_csv, quality_table, write_summary
from py_morphgrasp.exceptions import DomainError, StateError
from py_morphgrasp.geometry.objects import ObjectModel
from py_morphgrasp.hand.canonical import POSE_DIM, CanonicalPose, from_canonical, poses_to_json, zero_masked
from py_morphgrasp.hand.embodiment import Embodiment
from py_morphgrasp.hand.rotation import matrix_to_rot6, rot6_to_matrix
from py_morphgrasp.models.grasp_model import GraspDiffusionModel

logger = logging.getLogger(__name__)

ORIENTATION_MODES = ("identity", "random")


def object_rotations(n: int, mode: str, seed: int) -> np.ndarray:
    """
    Rotaciones (n, 3, 3) del frame de la mano respecto al objeto.

    ``identity`` devuelve las poses en el frame canónico; ``random`` sortea
    una orientación por muestra.
    """
    if mode not in ORIENTATION_MODES:
        raise DomainError(f"Modo de orientación desconocido: {mode}. Opciones: {', '.join(ORIENTATION_MODES)}")
    if mode == "identity":
        return np.repeat(np.eye(3)[None], n, axis=0)
    rotations = Rotation.random(n, np.random.default_rng(seed)).as_matrix()
    return rotations.reshape(n, 3, 3)


def sample(
    model: GraspDiffusionModel,
    obj: ObjectModel,
    embodiment: Embodiment,
    n: int = config.DEFAULT_SAMPLE_COUNT,
    seed: int = 0,
    steps: Optional[int] = None,
    orientations: str = "identity",
    canonicalize: Optional[bool] = None,
) -> List[CanonicalPose]:
    """
    Genera n poses para un objeto y un embodiment.

    Args:
        model: Modelo entrenado (o cargado de un checkpoint)
        obj: Objeto en su frame
        embodiment: Mano de destino
        n: Número de agarres
        seed: Semilla (misma semilla, mismas poses)
        steps: Pasos del programa reespaciado (None: los T del entrenamiento)
        orientations: ``identity`` o ``random`` (rota el objeto por Rᵀ y la pose por R)
        canonicalize: Rotación congelada en la identidad; None la lee del checkpoint

    Raises:
        StateError: el modelo no está entrenado ni cargado
    """
    if model.step is None:
        raise StateError("El modelo no tiene pesos entrenados: cargue un checkpoint")
    if n < 1:
        raise DomainError(f"n debe ser >= 1 (recibido {n})")

    run_config = model.run_config
    if canonicalize is None:
        canonicalize = run_config.train.canonicalize if run_config is not None else True
    schedule = (
        DiffusionSchedule.from_config(run_config.schedule)
        if run_config is not None
        else DiffusionSchedule.linear(model.num_steps)
    )
    if steps is not None and steps < schedule.T:
        schedule = schedule.respaced(steps)
    logger.info(
        f"Muestreando {n} agarres de '{embodiment.name}' sobre '{obj.name}' "
        f"({schedule.T} pasos, semilla {seed})"
    )

    rotations = object_rotations(n, orientations, seed)
    cloud = obj
    if obj.n_points != model.model_config.cloud_points:
        cloud = obj.resampled(model.model_config.cloud_points, seed=seed)
    points = torch.as_tensor(cloud.points, dtype=torch.float64)
    generator = torch.Generator().manual_seed(int(seed))
    dtype = model.dtype

    model.eval()
    with torch.no_grad():
        M, delta = model.encode_morphology(embodiment)
        groups = model.point_encoder.group(cloud.points)
        clouds = torch.einsum("bji,nj->bni", torch.as_tensor(rotations, dtype=torch.float64), points)
        P = model.point_encoder(clouds.to(dtype), groups).P
        M = M.expand(n, *M.shape)
        delta_b = delta.expand(n, *delta.shape)

        x = torch.randn((n, POSE_DIM), generator=generator, dtype=torch.float64)
        channels = torch.as_tensor(diffused_channels(canonicalize))
        if canonicalize:
            x = freeze_rotation(x)
        for i in reversed(range(schedule.T)):
            t_model = torch.full((n,), int(schedule.timesteps[i]), dtype=torch.long)
            eps_hat = model(x.to(dtype), delta_b, M, P, t_model).to(torch.float64)
            eps_hat = eps_hat * channels.to(eps_hat.dtype)
            z = torch.randn((n, POSE_DIM), generator=generator, dtype=torch.float64) if i > 0 else None
            x = reverse_step(x, eps_hat, i, schedule, z)
            if canonicalize:
                x = freeze_rotation(x)

    mask = embodiment.mask
    poses = []
    for row, R in zip(x.numpy(), rotations):
        pose = CanonicalPose.from_vector(row, mask)
        hand_R = rot6_to_matrix(pose.r6)
        # La pose se obtuvo con el objeto rotado por Rᵀ: se lleva al frame del objeto
        poses.append(
            CanonicalPose(
                t=R @ pose.t,
                r6=matrix_to_rot6(R @ hand_R),
                theta_c=zero_masked(pose.theta_c, mask),
                delta=mask.copy(),
            )
        )
    return poses


def run_sample(
    model: GraspDiffusionModel,
    obj: ObjectModel,
    embodiment: Embodiment,
    out_dir: Union[str, Path],
    n: int = config.DEFAULT_SAMPLE_COUNT,
    seed: int = 0,
    steps: Optional[int] = None,
    orientations: str = "identity",
    loss_config: Optional[LossConfig] = None,
) -> Dict[str, Any]:
    """
    Muestrea, evalúa y escribe los archivos de salida.

    Archivos: ``poses.json`` (canónicas), ``poses_native.json`` (ángulos del
    embodiment), ``quality.csv`` y ``summary.json`` con la diversidad (``null`` con
    ``diversity_note`` si n < 2).

    Returns:
        Dict con estadísticas del muestreo:
            - n: agarres generados
            - diversity: diversidad del lote (rad)
            - seconds_per_grasp: tiempo de muestreo por agarre
            - files: rutas escritas
    """
    logger.info("=== Inicio de muestreo ===")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if loss_config is None:
        loss_config = model.run_config.loss if model.run_config is not None else LossConfig()

    start = time.perf_counter()
    poses = sample(model, obj, embodiment, n=n, seed=seed, steps=steps, orientations=orientations)
    elapsed = time.perf_counter() - start
    seconds_per_grasp = elapsed / len(poses)
    logger.info(f"{len(poses)} agarres en {elapsed:.2f} s ({seconds_per_grasp:.4f} s por agarre)")

    poses_path = out_dir / "poses.json"
    poses_path.write_text(poses_to_json(poses), encoding="utf-8")
    native = [from_canonical(p, embodiment.mapping) for p in poses]
    native_path = out_dir / "poses_native.json"
    native_path.write_text(native_json(native, embodiment), encoding="utf-8")

    reports = [grasp_quality(p, embodiment, obj, loss_config) for p in poses]
    quality_path = export_csv(quality_table(reports), out_dir / "quality.csv")
    summary = {
        "object": obj.name,
        "embodiment": embodiment.name,
        "n": len(poses),
        "seed": seed,
        "steps": steps,
        "diversity": None,
    }
    if len(poses) >= 2:
        summary["diversity"] = diversity(poses)
    else:
        summary["diversity_note"] = "la diversidad necesita n >= 2"
        logger.info(f"Diversidad no calculada: {len(poses)} agarre(s), se necesitan al menos 2")
    value = summary["diversity"]
    summary_path = write_summary(summary, out_dir / "summary.json")

    logger.info("=== Muestreo completado ===")
    return {
        "n": len(poses),
        "diversity": value,
        "seconds_per_grasp": seconds_per_grasp,
        "poses": poses,
        "files": [poses_path, native_path, quality_path, summary_path],
    }


def native_json(native, embodiment: Embodiment) -> str:
    """Poses nativas con los nombres de joint del embodiment."""
    payload = {
        "embodiment": embodiment.name,
        "joint_names": list(embodiment.mapping.joint_names),
        "poses": [
            {
                "t": [float(v) for v in pose.t],
                "r6": [float(v) for v in pose.r6],
                "theta": [float(v) for v in pose.theta],
            }
            for pose in native
        ],
    }
    return json.dumps(payload, indent=2)
