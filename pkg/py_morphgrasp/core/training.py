"""
Módulo de entrenamiento del modelo de difusión.

Este módulo contiene el paso de entrenamiento (ruido, predicción, pérdidas de
reconstrucción, morfológica y físicas sobre x̂0, actualización Adam) y el
bucle completo con log de métricas, checkpoints periódicos y reanudación.
"""

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import torch

from py_morphgrasp import config
from py_morphgrasp.config import RunConfig
from py_morphgrasp.core.diffusion import (
    DiffusionSchedule,
    diffused_channels,
    forward_noise,
    freeze_rotation,
    predict_x0,
)
from py_morphgrasp.core.losses import (
    LossReport,
    canonical_descendant_counts,
    erf_loss_rows,
    joint_weights,
    morph_loss_rows,
    recon_loss_rows,
    spf_loss_rows,
    srf_loss_rows,
    total_loss,
)
from py_morphgrasp.data.dataset import GraspDataset, load_dataset
from py_morphgrasp.exceptions import EmbodimentError, NumericError, StateError
from py_morphgrasp.geometry.objects import ObjectModel
from py_morphgrasp.hand.embodiment import load_builtin_embodiment
from py_morphgrasp.hand.rotation import IDENTITY_R6, rot6_to_matrix
from py_morphgrasp.hand.surface import HandSurface
from py_morphgrasp.models.checkpoint import load_into, read_checkpoint, save_checkpoint
from py_morphgrasp.models.grasp_model import GraspDiffusionModel

logger = logging.getLogger(__name__)

POSE_LOSS_WEIGHTINGS = ("none", "alpha_bar")


@dataclass
class TrainingBatch:
    """
    Filas de un batch de entrenamiento.

    ``x0`` ya está en el frame de entrenamiento (canónico si la ejecución
    canonicaliza) y ``frame_rotation`` lleva ese frame de vuelta al del objeto.
    """

    x0: torch.Tensor  # (b, 33) float64
    delta: torch.Tensor  # (b, 24)
    object_index: np.ndarray  # (b,)
    embodiment_index: np.ndarray  # (b,)
    record_index: np.ndarray  # (b,)
    frame_rotation: torch.Tensor  # (b, 3, 3) float64

    def __len__(self) -> int:
        return len(self.record_index)


class Trainer:
    """
    Estado del entrenamiento: modelo, optimizador, generador y cachés.

    Example:
        >>> trainer = Trainer(GraspDiffusionModel(), dataset, RunConfig())
        >>> report = trainer.train_step()
    """

    def __init__(
        self,
        model: GraspDiffusionModel,
        dataset: GraspDataset,
        run_config: RunConfig,
        rng: Optional[np.random.Generator] = None,
    ):
        if len(dataset) == 0:
            raise StateError("El dataset de entrenamiento está vacío")
        if run_config.loss.pose_loss_weighting not in POSE_LOSS_WEIGHTINGS:
            raise ValueError(
                f"pose_loss_weighting inválido: {run_config.loss.pose_loss_weighting}. "
                f"Opciones: {', '.join(POSE_LOSS_WEIGHTINGS)}"
            )
        self.model = model
        self.dataset = dataset
        self.run_config = run_config
        self.canonicalize = run_config.train.canonicalize
        self.schedule = DiffusionSchedule.from_config(run_config.schedule)
        self.channels = diffused_channels(self.canonicalize)
        self.rng = rng if rng is not None else np.random.default_rng(run_config.train.seed)
        self.optimizer = torch.optim.Adam(model.parameters(), lr=run_config.train.learning_rate)
        self.step = 0

        self.surfaces = [HandSurface(e) for e in dataset.embodiments]
        self.weights = torch.stack(
            [
                torch.as_tensor(
                    joint_weights(canonical_descendant_counts(e.tree, e.mapping), e.mask).w,
                    dtype=torch.float64,
                )
                for e in dataset.embodiments
            ]
        )
        self.objects = [self._training_cloud(obj) for obj in dataset.objects]
        self._groups: Dict[int, Any] = {}
        self._prepare_records()

    def _training_cloud(self, obj: ObjectModel) -> ObjectModel:
        n_points = self.run_config.model.cloud_points
        if obj.n_points == n_points:
            return obj
        logger.debug(f"Remuestreando '{obj.name}' de {obj.n_points} a {n_points} puntos")
        return obj.resampled(n_points, seed=self.run_config.train.seed)

    def _prepare_records(self):
        """x0 en el frame de entrenamiento y la rotación que lo deshace, por registro."""
        x0, rotations = [], []
        for record in self.dataset.records:
            vector = record.pose.to_vector()
            R = np.eye(3)
            if self.canonicalize:
                R = rot6_to_matrix(record.pose.r6)
                vector[:3] = R.T @ vector[:3]
                vector[3:9] = IDENTITY_R6
            x0.append(vector)
            rotations.append(R)
        self.x0 = torch.as_tensor(np.stack(x0), dtype=torch.float64)
        self.rotations = torch.as_tensor(np.stack(rotations), dtype=torch.float64)
        self.deltas = torch.as_tensor(
            np.stack([r.pose.delta for r in self.dataset.records]), dtype=torch.float64
        )
        self.record_objects = np.array([r.object for r in self.dataset.records], dtype=np.int64)
        self.record_embodiments = np.array([r.embodiment for r in self.dataset.records], dtype=np.int64)

    def object_groups(self, object_index: int):
        """FPS + k-NN de un objeto; la rotación no cambia el agrupamiento."""
        if object_index not in self._groups:
            self._groups[object_index] = self.model.point_encoder.group(self.objects[object_index].points)
        return self._groups[object_index]

    def draw_batch(self) -> TrainingBatch:
        n = len(self.dataset)
        size = self.run_config.train.batch_size
        index = self.rng.choice(n, size=size, replace=size > n)
        batch = TrainingBatch(
            x0=self.x0[index],
            delta=self.deltas[index],
            object_index=self.record_objects[index],
            embodiment_index=self.record_embodiments[index],
            record_index=index,
            frame_rotation=self.rotations[index],
        )
        self.check_batch(batch)
        return batch

    def check_batch(self, batch: TrainingBatch):
        """
        Raises:
            EmbodimentError: la máscara de alguna fila no es la de su embodiment
        """
        for row, (e, delta) in enumerate(zip(batch.embodiment_index, batch.delta)):
            expected = torch.as_tensor(self.dataset.embodiments[e].mask, dtype=delta.dtype)
            if not torch.equal(delta, expected):
                raise EmbodimentError(
                    f"La fila {row} (registro {batch.record_index[row]}) no tiene la máscara "
                    f"de '{self.dataset.embodiments[e].name}'"
                )

    # -------------------------------------------------------------------------
    # Condicionamiento
    # -------------------------------------------------------------------------

    def encode_morphology(self, batch: TrainingBatch) -> torch.Tensor:
        unique, inverse = np.unique(batch.embodiment_index, return_inverse=True)
        M = torch.stack([self.model.encode_morphology(self.dataset.embodiments[e])[0] for e in unique])
        return M[torch.as_tensor(inverse, dtype=torch.long)]

    def encode_points(self, batch: TrainingBatch) -> torch.Tensor:
        """P (b, N_p, D): las filas se agrupan por objeto para compartir el agrupamiento."""
        parts, order = [], []
        for object_index in np.unique(batch.object_index):
            rows = np.flatnonzero(batch.object_index == object_index)
            cloud = torch.as_tensor(self.objects[object_index].points, dtype=torch.float64)
            # Nube en el frame de entrenamiento: R^T p para cada fila
            clouds = torch.einsum("bji,nj->bni", batch.frame_rotation[rows], cloud)
            feature = self.model.point_encoder(clouds.to(self.model.dtype), self.object_groups(object_index))
            parts.append(feature.P)
            order.append(rows)
        P = torch.cat(parts)
        inverse = torch.as_tensor(np.argsort(np.concatenate(order)), dtype=torch.long)
        return P[inverse]

    # -------------------------------------------------------------------------
    # Pérdidas
    # -------------------------------------------------------------------------

    def physics_rows(self, x0_hat: torch.Tensor, batch: TrainingBatch, sample_seed: int) -> Dict[str, torch.Tensor]:
        """SPF, ERF y SRF por fila sobre la mano colocada por x̂0 en el frame del objeto."""
        loss_config = self.run_config.loss
        b = len(batch)
        values = {name: torch.zeros(b, dtype=torch.float64) for name in ("spf", "erf", "srf")}
        for e in np.unique(batch.embodiment_index):
            rows = np.flatnonzero(batch.embodiment_index == e)
            surface = self.surfaces[e]
            samples = surface.draw(loss_config.hand_points, sample_seed)
            points = surface.points(x0_hat[rows], samples, frame_rotation=batch.frame_rotation[rows])
            rows_t = torch.as_tensor(rows, dtype=torch.long)
            srf = srf_loss_rows(points, samples.link_index, loss_config, surface.adjacency)
            values["srf"] = values["srf"].index_put((rows_t,), srf)
            for object_index in np.unique(batch.object_index[rows]):
                local = np.flatnonzero(batch.object_index[rows] == object_index)
                local_t = torch.as_tensor(local, dtype=torch.long)
                obj = self.objects[object_index]
                target = torch.as_tensor(rows[local], dtype=torch.long)
                values["spf"] = values["spf"].index_put((target,), spf_loss_rows(points[local_t], obj, loss_config))
                values["erf"] = values["erf"].index_put((target,), erf_loss_rows(points[local_t], obj))
        return values

    def compute_losses(self, batch: TrainingBatch, t: np.ndarray, eps: np.ndarray, sample_seed: int):
        """Pérdida total diferenciable y su informe para un batch y un ruido dados."""
        loss_config = self.run_config.loss
        eps_t = torch.as_tensor(eps, dtype=torch.float64)
        x_t = forward_noise(batch.x0, t, eps_t, self.schedule)
        if self.canonicalize:
            x_t = freeze_rotation(x_t)

        M = self.encode_morphology(batch)
        P = self.encode_points(batch)
        dtype = self.model.dtype
        eps_hat = self.model(
            x_t.to(dtype), batch.delta.to(dtype), M, P, torch.as_tensor(self.schedule.timesteps[t])
        ).to(torch.float64)

        recon = recon_loss_rows(eps_t, eps_hat, self.channels).mean()
        x0_hat = predict_x0(x_t, t, eps_hat, self.schedule)
        if self.canonicalize:
            x0_hat = freeze_rotation(x0_hat)

        if loss_config.pose_loss_weighting == "alpha_bar":
            row_weight = self.schedule.gather(self.schedule.alpha_bars, t, x0_hat).reshape(-1)
        else:
            row_weight = torch.ones(len(batch), dtype=torch.float64)

        components = {"recon": recon}
        if loss_config.use_morph_loss:
            morph = morph_loss_rows(
                x0_hat,
                batch.x0,
                self.weights[torch.as_tensor(batch.embodiment_index, dtype=torch.long)],
                batch.delta,
                include_rotation=not self.canonicalize,
            )
            components["morph"] = (row_weight * morph).mean()
        for name, rows in self.physics_rows(x0_hat, batch, sample_seed).items():
            components[name] = (row_weight * rows).mean()
        return total_loss(components, loss_config)

    def train_step(self, batch: Optional[TrainingBatch] = None) -> LossReport:
        """
        Un paso: t uniforme por fila, ruido, ε̂, pérdidas y actualización Adam.

        Raises:
            NumericError: algún término de la pérdida no es finito
        """
        batch = batch if batch is not None else self.draw_batch()
        b = len(batch)
        t = self.rng.integers(0, self.schedule.T, size=b)
        eps = self.rng.standard_normal((b, self.x0.shape[1]))
        eps[:, ~self.channels] = 0.0
        sample_seed = int(self.rng.integers(0, 2**31 - 1))

        self.model.train()
        self.optimizer.zero_grad()
        total, report = self.compute_losses(batch, t, eps, sample_seed)
        total.backward()
        self.optimizer.step()
        self.step += 1
        self.model.step = self.step
        return report

    # -------------------------------------------------------------------------
    # Persistencia
    # -------------------------------------------------------------------------

    def save(self, path: Union[str, Path]) -> Path:
        return save_checkpoint(
            path,
            self.model,
            self.run_config,
            self.step,
            optimizer=self.optimizer,
            rng_state=self.rng.bit_generator.state,
        )

    def resume(self, path: Union[str, Path]):
        """Restaura pesos, momentos del optimizador, paso y estado del generador."""
        checkpoint = read_checkpoint(path)
        load_into(checkpoint, self.model, self.optimizer)
        if checkpoint.rng_state is None:
            raise StateError(f"El checkpoint {path} no guarda el estado del generador")
        self.rng.bit_generator.state = checkpoint.rng_state
        self.step = checkpoint.step
        logger.info(f"Entrenamiento reanudado desde {path} (paso {self.step})")


def train_step(trainer: Trainer, batch: Optional[TrainingBatch] = None) -> LossReport:
    """Forma funcional de Trainer.train_step."""
    return trainer.train_step(batch)


# =============================================================================
# BUCLE COMPLETO
# =============================================================================


def resolve_dataset(run_config: RunConfig, manifest: Optional[Union[str, Path]] = None) -> GraspDataset:
    """Dataset del manifiesto indicado; sin manifiesto, el dataset sintético de la pinza."""
    manifest = manifest or run_config.train.manifest
    if manifest:
        dataset = load_dataset(manifest)
        return dataset.split("train") if "train" in dataset.splits else dataset

    from py_morphgrasp.data.toy import generate_toy_dataset

    logger.info("Sin manifiesto: se usa el dataset sintético de la pinza")
    return generate_toy_dataset(seed=run_config.train.seed)


def append_metrics(path: Path, step: int, report: LossReport, wall_ms: float):
    record = {"step": step, **report.to_dict(), "wall_ms": round(wall_ms, 3)}
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(record) + "\n")


def run_training(
    run_config: RunConfig,
    run_dir: Union[str, Path],
    dataset: Optional[GraspDataset] = None,
    resume: bool = False,
) -> Dict[str, Any]:
    """
    Ejecuta el entrenamiento completo.

    Args:
        run_config: Configuración resuelta
        run_dir: Directorio de la ejecución (config, métricas y checkpoints)
        dataset: Dataset ya cargado; None lo resuelve desde la configuración
        resume: Reanudar desde ``checkpoints/latest.ckpt``

    Returns:
        Dict con estadísticas del entrenamiento:
            - steps: pasos completados
            - first_loss / final_loss: pérdida total del primer y último paso ejecutados
            - checkpoint: ruta del último checkpoint
            - metrics_log: ruta del log de métricas

    Raises:
        NumericError: pérdida no finita (se conserva el último checkpoint válido)
    """
    logger.info("=== Inicio de entrenamiento ===")
    run_dir = Path(run_dir)
    config.save_run_config(run_config, run_dir)
    checkpoint_path = run_dir / config.CHECKPOINT_DIR / config.LATEST_CHECKPOINT
    metrics_path = run_dir / config.METRICS_LOG_FILE

    dataset = dataset if dataset is not None else resolve_dataset(run_config)
    torch.manual_seed(run_config.train.seed)
    model = GraspDiffusionModel.from_run_config(run_config)
    if run_config.model.standardize_features:
        model.fit_standardization([load_builtin_embodiment(name) for name in config.BUILTIN_EMBODIMENTS])
    trainer = Trainer(model, dataset, run_config)

    if resume:
        if not checkpoint_path.exists():
            raise StateError(f"No hay checkpoint para reanudar en {checkpoint_path}")
        trainer.resume(checkpoint_path)
    elif metrics_path.exists():
        metrics_path.unlink()

    train_config = run_config.train
    logger.info(
        f"{len(dataset)} registros, {len(dataset.objects)} objetos, {len(dataset.embodiments)} embodiments; "
        f"pasos {trainer.step}..{train_config.steps}"
    )
    history: List[float] = []
    saved_step = trainer.step if resume else None
    try:
        while trainer.step < train_config.steps:
            start = time.perf_counter()
            report = trainer.train_step()
            wall_ms = (time.perf_counter() - start) * 1000.0
            append_metrics(metrics_path, trainer.step, report, wall_ms)
            history.append(report.total)
            if trainer.step % train_config.log_every == 0 or trainer.step == train_config.steps:
                logger.info(
                    f"Paso {trainer.step}: total={report.total:.6f} recon={report.recon:.6f} "
                    f"morph={report.morph:.6f} spf={report.spf:.6f} erf={report.erf:.6f} srf={report.srf:.6f}"
                )
            else:
                logger.debug(f"Paso {trainer.step}: total={report.total:.6f}")
            if trainer.step % train_config.checkpoint_every == 0:
                trainer.save(checkpoint_path)
                saved_step = trainer.step
    except NumericError as ex:
        logger.error(f"Pérdida no finita en el paso {trainer.step + 1} ({ex.where}); se conserva el último checkpoint")
        raise

    if saved_step != trainer.step:
        trainer.save(checkpoint_path)

    logger.info("=== Entrenamiento completado ===")
    return {
        "steps": trainer.step,
        "first_loss": history[0] if history else None,
        "final_loss": history[-1] if history else None,
        "checkpoint": checkpoint_path,
        "metrics_log": metrics_path,
        "run_dir": run_dir,
    }
