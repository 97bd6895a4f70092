"""
Checkpoints binarios.

Formato: longitud de la cabecera (uint64 little-endian), cabecera JSON y a
continuación los tensores como float32 little-endian. Los momentos del
optimizador se guardan como tensores bajo ``optim/``.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import torch

from py_morphgrasp import __version__
from py_morphgrasp.config import RunConfig, run_config_from_dict
from py_morphgrasp.exceptions import CheckpointError
from py_morphgrasp.hand.canonical import N_SLOTS, POSE_DIM
from py_morphgrasp.models.grasp_model import GraspDiffusionModel

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
HEADER_LENGTH_BYTES = 8
OPTIM_PREFIX = "optim/"


@dataclass
class Checkpoint:
    """Cabecera y tensores leídos de disco."""

    header: Dict[str, Any]
    tensors: Dict[str, np.ndarray]

    @property
    def step(self) -> int:
        return int(self.header["step"])

    @property
    def run_config(self) -> RunConfig:
        return run_config_from_dict(self.header["config"])

    @property
    def rng_state(self) -> Optional[Dict[str, Any]]:
        return self.header.get("rng_state")


def model_dims(model: GraspDiffusionModel) -> Dict[str, int]:
    cfg = model.model_config
    return {
        "feature_dim": cfg.feature_dim,
        "morph_layers": cfg.morph_layers,
        "morph_heads": cfg.morph_heads,
        "max_hops": cfg.max_hops,
        "denoiser_blocks": cfg.denoiser_blocks,
        "denoiser_heads": cfg.denoiser_heads,
        "point_groups": cfg.point_groups,
        "group_size": cfg.group_size,
        "ffn_mult": cfg.ffn_mult,
        "num_steps": model.num_steps,
        "pose_dim": POSE_DIM,
        "slots": N_SLOTS,
    }


def _optimizer_tensors(
    model: GraspDiffusionModel, optimizer: torch.optim.Optimizer
) -> Dict[str, torch.Tensor]:
    names = [name for name, _ in model.named_parameters()]
    state = optimizer.state_dict()["state"]
    tensors = {}
    for index, values in state.items():
        for key, value in values.items():
            tensors[f"{OPTIM_PREFIX}{names[index]}/{key}"] = torch.as_tensor(value)
    return tensors


def save_checkpoint(
    path: Union[str, Path],
    model: GraspDiffusionModel,
    run_config: RunConfig,
    step: int,
    optimizer: Optional[torch.optim.Optimizer] = None,
    rng_state: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Escribe un checkpoint atómicamente (archivo temporal + rename).

    Args:
        path: Archivo de destino
        model: Modelo a guardar
        run_config: Configuración resuelta de la ejecución
        step: Pasos de entrenamiento completados
        optimizer: Optimizador cuyo estado se guarda para reanudar
        rng_state: Estado del generador numpy del bucle de entrenamiento
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    tensors: Dict[str, torch.Tensor] = dict(model.state_dict())
    if optimizer is not None:
        tensors.update(_optimizer_tensors(model, optimizer))

    entries, blobs, offset = [], [], 0
    for name, tensor in tensors.items():
        data = tensor.detach().cpu().numpy().astype("<f4").tobytes()
        entries.append({"name": name, "shape": list(tensor.shape), "offset": offset})
        blobs.append(data)
        offset += len(data)

    header = {
        "version": CHECKPOINT_VERSION,
        "tool_version": __version__,
        "dims": model_dims(model),
        "block_count": model.model_config.denoiser_blocks,
        "config_hash": run_config.config_hash(),
        "config": run_config.to_dict(),
        "step": int(step),
        "rng_state": rng_state,
        "tensors": entries,
    }
    header_bytes = json.dumps(header).encode("utf-8")

    tmp_path = path.with_suffix(path.suffix + ".tmp")
    with open(tmp_path, "wb") as f:
        f.write(np.array([len(header_bytes)], dtype="<u8").tobytes())
        f.write(header_bytes)
        for blob in blobs:
            f.write(blob)
    tmp_path.replace(path)
    logger.info(f"Checkpoint guardado en {path} (paso {step})")
    return path


def read_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Lee cabecera y tensores.

    Raises:
        CheckpointError: archivo truncado, cabecera ilegible o versión desconocida
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < HEADER_LENGTH_BYTES:
        raise CheckpointError(f"Checkpoint truncado: {path}")
    header_length = int(np.frombuffer(data[:HEADER_LENGTH_BYTES], dtype="<u8")[0])
    body_start = HEADER_LENGTH_BYTES + header_length
    try:
        header = json.loads(data[HEADER_LENGTH_BYTES:body_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as ex:
        raise CheckpointError(f"Cabecera de checkpoint ilegible en {path}: {ex}") from ex
    if header.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"Versión de checkpoint no soportada: {header.get('version')}")

    tensors = {}
    for entry in header["tensors"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        start = body_start + entry["offset"]
        end = start + 4 * count
        if end > len(data):
            raise CheckpointError(f"Checkpoint truncado en el tensor '{entry['name']}'")
        tensors[entry["name"]] = np.frombuffer(data[start:end], dtype="<f4").reshape(entry["shape"])
    return Checkpoint(header=header, tensors=tensors)


def _restore_optimizer(
    model: GraspDiffusionModel, optimizer: torch.optim.Optimizer, tensors: Dict[str, np.ndarray]
):
    index_of = {name: i for i, (name, _) in enumerate(model.named_parameters())}
    state: Dict[int, Dict[str, torch.Tensor]] = {}
    for name, array in tensors.items():
        if not name.startswith(OPTIM_PREFIX):
            continue
        param_name, key = name[len(OPTIM_PREFIX) :].rsplit("/", 1)
        if param_name not in index_of:
            raise CheckpointError(f"Estado del optimizador para un parámetro desconocido: {param_name}")
        state.setdefault(index_of[param_name], {})[key] = torch.tensor(np.array(array))
    saved = optimizer.state_dict()
    optimizer.load_state_dict({"state": state, "param_groups": saved["param_groups"]})


def load_into(
    checkpoint: Checkpoint,
    model: GraspDiffusionModel,
    optimizer: Optional[torch.optim.Optimizer] = None,
) -> GraspDiffusionModel:
    """
    Carga los pesos validando dimensiones y la forma de cada tensor.

    Raises:
        CheckpointError: dimensiones o formas incompatibles
    """
    expected_dims = model_dims(model)
    if checkpoint.header["dims"] != expected_dims:
        diff = {
            k: (checkpoint.header["dims"].get(k), v)
            for k, v in expected_dims.items()
            if checkpoint.header["dims"].get(k) != v
        }
        raise CheckpointError(f"Dimensiones del checkpoint incompatibles (guardado, esperado): {diff}")

    state = model.state_dict()
    for name, target in state.items():
        if name not in checkpoint.tensors:
            raise CheckpointError(f"Falta el tensor '{name}' en el checkpoint")
        array = checkpoint.tensors[name]
        if tuple(array.shape) != tuple(target.shape):
            raise CheckpointError(
                f"Forma incompatible para '{name}': {tuple(array.shape)} != {tuple(target.shape)}"
            )
        state[name] = torch.tensor(np.array(array), dtype=target.dtype)
    model.load_state_dict(state)
    if optimizer is not None:
        _restore_optimizer(model, optimizer, checkpoint.tensors)
    model.step = checkpoint.step
    return model


def load_model(path: Union[str, Path]) -> Tuple[GraspDiffusionModel, Checkpoint]:
    """Reconstruye el modelo con la configuración guardada y carga sus pesos."""
    checkpoint = read_checkpoint(path)
    model = GraspDiffusionModel.from_run_config(checkpoint.run_config)
    load_into(checkpoint, model)
    model.eval()
    logger.info(f"Modelo cargado desde {path} (paso {checkpoint.step})")
    return model, checkpoint
