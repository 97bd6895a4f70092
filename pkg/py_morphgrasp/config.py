"""Configuración centralizada para py_morphgrasp."""

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

logger = logging.getLogger(__name__)

# Rutas base
PACKAGE_DIR = Path(__file__).parent
BASE_DIR = PACKAGE_DIR.parent  # Subir al directorio raíz del proyecto
RESOURCES_DIR = PACKAGE_DIR / "resources"
HANDS_DIR = RESOURCES_DIR / "hands"
RUNS_DIR = BASE_DIR / "runs"
DATA_DIR = BASE_DIR / "data"

# Configuración de logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Paralelismo (torch.set_num_threads)
MORPHGRASP_THREADS = os.getenv("MORPHGRASP_THREADS")

# Manos incluidas en el paquete
BUILTIN_EMBODIMENTS = ("shadow", "allegro", "barrett", "toy_gripper")

# Nombres de archivo dentro de un directorio de ejecución
RUN_CONFIG_FILE = "config.json"
METRICS_LOG_FILE = "metrics.jsonl"
CHECKPOINT_DIR = "checkpoints"
LATEST_CHECKPOINT = "latest.ckpt"

# Muestreo por defecto ("64 grasps por objeto")
DEFAULT_SAMPLE_COUNT = 64


@dataclass
class ModelConfig:
    """Dimensiones de los codificadores y del denoiser."""

    feature_dim: int = 256
    morph_layers: int = 4
    morph_heads: int = 8
    max_hops: int = 8
    hard_mask: bool = True
    use_graph_bias: bool = True
    standardize_features: bool = False
    denoiser_blocks: int = 8
    denoiser_heads: int = 1
    use_morphology: bool = True
    point_groups: int = 64
    group_size: int = 32
    cloud_points: int = 2048
    ffn_mult: int = 2


@dataclass
class ScheduleConfig:
    """Programa de ruido lineal; None escala los extremos por 1000/T."""

    steps: int = 100
    beta_start: Optional[float] = None
    beta_end: Optional[float] = None


@dataclass
class LossConfig:
    """Pesos de la pérdida total y parámetros de las pérdidas físicas."""

    alpha_spf: float = 1.0
    alpha_erf: float = 1.0
    alpha_srf: float = 1.0
    tau: float = 0.02
    d_th: float = 0.005
    eps_guard: float = 1e-8
    hand_points: int = 512
    exclude_adjacent: bool = True
    use_morph_loss: bool = True
    # "alpha_bar" pondera L_m y los términos físicos de cada fila por ᾱ_t
    pose_loss_weighting: str = "none"
    contact_tolerance: float = 0.005


@dataclass
class TrainConfig:
    """Bucle de entrenamiento."""

    learning_rate: float = 1e-4
    batch_size: int = 128
    steps: int = 2000
    seed: int = 0
    canonicalize: bool = True
    checkpoint_every: int = 500
    log_every: int = 10
    manifest: Optional[str] = None


@dataclass
class RunConfig:
    """Configuración completa de una ejecución (archivo + overrides)."""

    model: ModelConfig = field(default_factory=ModelConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        """Hash estable del contenido de la configuración."""
        payload = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()[:16]


def _build_section(cls, values: Dict[str, Any]):
    known = {f.name: f for f in fields(cls)}
    unknown = set(values) - set(known)
    if unknown:
        raise ValueError(f"Claves desconocidas en la sección {cls.__name__}: {sorted(unknown)}")
    kwargs = {}
    for name, value in values.items():
        default = getattr(cls(), name)
        if is_dataclass(default):
            kwargs[name] = _build_section(type(default), value)
        else:
            kwargs[name] = value
    return cls(**kwargs)


def run_config_from_dict(values: Dict[str, Any]) -> RunConfig:
    """Construye un RunConfig validando los nombres de las secciones y claves."""
    return _build_section(RunConfig, values or {})


def _coerce(raw: str, current: Any) -> Any:
    if isinstance(current, bool):
        lowered = raw.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"Valor booleano inválido: {raw}")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if current is None:
        try:
            return json.loads(raw)
        except json.JSONDecodeError:
            return raw
    return raw


def apply_overrides(run_config: RunConfig, overrides: Iterable[str]) -> RunConfig:
    """
    Aplica overrides con la forma ``seccion.clave=valor``.

    Args:
        run_config: Configuración base
        overrides: Cadenas ``seccion.clave=valor`` (por ejemplo ``train.steps=50``)

    Returns:
        Nueva configuración con los overrides aplicados
    """
    values = run_config.to_dict()
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ValueError(f"Override inválido (use seccion.clave=valor): {item}")
        key, raw = item.split("=", 1)
        section, name = key.split(".", 1)
        if section not in values or name not in values[section]:
            raise ValueError(f"Override desconocido: {key}")
        values[section][name] = _coerce(raw, values[section][name])
        logger.debug(f"Override aplicado: {key}={values[section][name]!r}")
    return run_config_from_dict(values)


def load_run_config(
    path: Optional[Union[str, Path]] = None, overrides: Iterable[str] = ()
) -> RunConfig:
    """
    Carga la configuración desde JSON (o TOML si tomllib está disponible).

    Args:
        path: Archivo de configuración; None usa los valores por defecto
        overrides: Overrides ``seccion.clave=valor`` aplicados después del archivo

    Returns:
        RunConfig completamente resuelto
    """
    values: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if path.suffix == ".toml":
            try:
                import tomllib
            except ImportError as ex:  # Python < 3.11
                raise ValueError("Los archivos TOML requieren Python >= 3.11") from ex
            with open(path, "rb") as f:
                values = tomllib.load(f)
        else:
            with open(path, encoding="utf-8") as f:
                values = json.load(f)
        logger.info(f"Configuración cargada desde {path}")
    return apply_overrides(run_config_from_dict(values), overrides)


def save_run_config(run_config: RunConfig, run_dir: Union[str, Path]) -> Path:
    """Escribe la configuración resuelta y la versión de la herramienta en el run."""
    from py_morphgrasp import __version__

    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    target = run_dir / RUN_CONFIG_FILE
    payload = {"tool_version": __version__, "config_hash": run_config.config_hash()}
    payload.update(run_config.to_dict())
    with open(target, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
    logger.info(f"Configuración guardada en {target}")
    return target


def read_saved_run_config(path: Union[str, Path]) -> RunConfig:
    """Lee un config.json escrito por save_run_config."""
    with open(path, encoding="utf-8") as f:
        values = json.load(f)
    values.pop("tool_version", None)
    values.pop("config_hash", None)
    return run_config_from_dict(values)


def configure_threads(threads: Optional[Union[str, int]] = None) -> Optional[int]:
    """Limita los hilos de torch según MORPHGRASP_THREADS."""
    value = threads if threads is not None else MORPHGRASP_THREADS
    if value in (None, ""):
        return None
    count = int(value)
    if count < 1:
        raise ValueError(f"MORPHGRASP_THREADS debe ser >= 1 (recibido {value})")
    import torch

    torch.set_num_threads(count)
    logger.debug(f"torch limitado a {count} hilos")
    return count


def builtin_hand_paths(name: str) -> Dict[str, Path]:
    """Rutas del URDF y del mapeo de una mano incluida."""
    if name not in BUILTIN_EMBODIMENTS:
        raise ValueError(f"Mano desconocida: {name}. Disponibles: {', '.join(BUILTIN_EMBODIMENTS)}")
    return {"urdf": HANDS_DIR / f"{name}.urdf", "mapping": HANDS_DIR / f"{name}.mapping.json"}
