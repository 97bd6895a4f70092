"""
Datasets de agarres: manifiesto JSON y tabla binaria de registros.

Manifiesto::

    {
      "embodiments": [{"name": "shadow", "urdf": "hands/shadow.urdf", "mapping": "..."}],
      "objects": [{"id": "sphere_0.03", "cloud_path": "...", "mesh_path": "...", "scale": 1.0}],
      "records_path": "records.bin",
      "splits": {"train": ["sphere_0.03"]}
    }

Los embodiments sin ``urdf`` se resuelven como manos incluidas en el paquete.
El archivo de registros empieza con una línea JSON de cabecera seguida de las
filas binarias (``RECORD_DTYPE``).
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from py_morphgrasp import config
from py_morphgrasp.exceptions import DatasetValidationError
from py_morphgrasp.geometry.objects import ObjectModel, load_object, save_object_ply
from py_morphgrasp.hand.canonical import MASK_BYTES, POSE_DIM, CanonicalPose, pack_mask, save_mapping, unpack_mask
from py_morphgrasp.hand.embodiment import Embodiment, load_builtin_embodiment, load_embodiment
from py_morphgrasp.kinematics.urdf import tree_to_urdf

logger = logging.getLogger(__name__)

RECORDS_SCHEMA = "morphgrasp.records/1"
MANIFEST_FILE = "manifest.json"
RECORDS_FILE = "records.bin"

RECORD_DTYPE = np.dtype(
    [
        ("pose", "<f8", (POSE_DIM,)),
        ("mask", "u1", (MASK_BYTES,)),
        ("embodiment", "<u2"),
        ("object", "<u4"),
    ]
)


@dataclass(frozen=True, eq=False)
class GraspRecord:
    """Un agarre: índices de embodiment y objeto y la pose canónica."""

    embodiment: int
    object: int
    pose: CanonicalPose


@dataclass
class GraspDataset:
    """Embodiments, objetos y registros en orden determinista."""

    embodiments: List[Embodiment] = field(default_factory=list)
    objects: List[ObjectModel] = field(default_factory=list)
    records: List[GraspRecord] = field(default_factory=list)
    splits: Dict[str, List[str]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def object_ids(self) -> List[str]:
        return [obj.name for obj in self.objects]

    def embodiment_index(self, name: str) -> int:
        for i, embodiment in enumerate(self.embodiments):
            if embodiment.name == name:
                return i
        raise KeyError(f"Embodiment desconocido en el dataset: {name}")

    def object_index(self, object_id: str) -> int:
        return self.object_ids.index(object_id)

    def split(self, name: str) -> "GraspDataset":
        """Subconjunto con los registros de los objetos de un split."""
        if name not in self.splits:
            raise KeyError(f"Split desconocido: {name}. Disponibles: {sorted(self.splits)}")
        keep = {self.object_index(object_id) for object_id in self.splits[name]}
        return GraspDataset(
            embodiments=self.embodiments,
            objects=self.objects,
            records=[r for r in self.records if r.object in keep],
            splits={name: self.splits[name]},
        )

    def pose_matrix(self) -> np.ndarray:
        return np.stack([r.pose.to_vector() for r in self.records]) if self.records else np.zeros((0, POSE_DIM))

    def validate(self):
        """
        Comprueba que cada registro corresponde a su embodiment.

        Raises:
            DatasetValidationError: índice fuera de rango, máscara distinta o
                ángulos no nulos en slots enmascarados
        """
        for i, record in enumerate(self.records):
            if not 0 <= record.embodiment < len(self.embodiments):
                raise DatasetValidationError(f"embodiment {record.embodiment} inexistente", i)
            if not 0 <= record.object < len(self.objects):
                raise DatasetValidationError(f"objeto {record.object} inexistente", i)
            embodiment = self.embodiments[record.embodiment]
            if not np.array_equal(record.pose.delta, embodiment.mask):
                raise DatasetValidationError(
                    f"la máscara δ no corresponde a '{embodiment.name}'", i
                )
            if np.any(record.pose.theta_c[embodiment.mask == 0] != 0.0):
                raise DatasetValidationError("ángulos no nulos en slots enmascarados", i)


# =============================================================================
# REGISTROS BINARIOS
# =============================================================================


def write_records(records: Sequence[GraspRecord], path: Union[str, Path], embodiments: Sequence[str], objects: Sequence[str]) -> Path:
    path = Path(path)
    rows = np.zeros(len(records), dtype=RECORD_DTYPE)
    for i, record in enumerate(records):
        rows[i]["pose"] = record.pose.to_vector()
        rows[i]["mask"] = np.frombuffer(pack_mask(record.pose.delta), dtype=np.uint8)
        rows[i]["embodiment"] = record.embodiment
        rows[i]["object"] = record.object
    header = {
        "schema": RECORDS_SCHEMA,
        "n_rows": len(records),
        "embodiments": list(embodiments),
        "objects": list(objects),
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header).encode("utf-8") + b"\n")
        f.write(rows.tobytes())
    return path


def read_records(path: Union[str, Path]) -> List[GraspRecord]:
    """
    Lee la tabla binaria de registros.

    Raises:
        DatasetValidationError: esquema desconocido o tamaño inconsistente
    """
    data = Path(path).read_bytes()
    newline = data.index(b"\n")
    header = json.loads(data[:newline].decode("utf-8"))
    if header.get("schema") != RECORDS_SCHEMA:
        raise DatasetValidationError(f"Esquema de registros desconocido: {header.get('schema')}")
    body = data[newline + 1 :]
    if len(body) != header["n_rows"] * RECORD_DTYPE.itemsize:
        raise DatasetValidationError(
            f"El archivo de registros tiene {len(body)} bytes para {header['n_rows']} filas"
        )
    rows = np.frombuffer(body, dtype=RECORD_DTYPE)
    return [
        GraspRecord(
            embodiment=int(row["embodiment"]),
            object=int(row["object"]),
            pose=CanonicalPose.from_vector(row["pose"], unpack_mask(row["mask"].tobytes())),
        )
        for row in rows
    ]


# =============================================================================
# MANIFIESTO
# =============================================================================


def _resolve(base: Path, value: Optional[str]) -> Optional[Path]:
    if value is None:
        return None
    path = Path(value)
    return path if path.is_absolute() else base / path


def load_dataset(manifest_path: Union[str, Path]) -> GraspDataset:
    """
    Carga un dataset y verifica cada registro.

    Raises:
        FileNotFoundError: falta algún archivo referenciado
        DatasetValidationError: registro inconsistente con su embodiment
    """
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    with open(manifest_path, encoding="utf-8") as f:
        manifest = json.load(f)
    logger.info(f"Cargando dataset desde {manifest_path}")

    embodiments = []
    for entry in manifest.get("embodiments", []):
        if entry.get("urdf"):
            embodiments.append(
                load_embodiment(
                    _resolve(base, entry["urdf"]), _resolve(base, entry.get("mapping")), name=entry["name"]
                )
            )
        else:
            embodiments.append(load_builtin_embodiment(entry["name"]))

    objects = []
    for entry in manifest.get("objects", []):
        cloud_path = _resolve(base, entry["cloud_path"])
        if not cloud_path.exists():
            raise FileNotFoundError(f"No se encontró la nube del objeto '{entry['id']}': {cloud_path}")
        objects.append(
            load_object(
                cloud_path,
                mesh_path=_resolve(base, entry.get("mesh_path")),
                scale=float(entry.get("scale", 1.0)),
                name=entry["id"],
            )
        )

    records: List[GraspRecord] = []
    if manifest.get("records_path"):
        records = read_records(_resolve(base, manifest["records_path"]))

    dataset = GraspDataset(
        embodiments=embodiments,
        objects=objects,
        records=records,
        splits={k: list(v) for k, v in manifest.get("splits", {}).items()},
    )
    dataset.validate()
    logger.info(
        f"Dataset cargado: {len(records)} registros, {len(objects)} objetos, "
        f"{len(embodiments)} embodiments"
    )
    return dataset


def save_dataset(dataset: GraspDataset, out_dir: Union[str, Path]) -> Path:
    """
    Escribe manifiesto, manos no incluidas, objetos y registros en ``out_dir``.

    Returns:
        Ruta del manifiesto
    """
    out_dir = Path(out_dir)
    (out_dir / "objects").mkdir(parents=True, exist_ok=True)
    dataset.validate()

    embodiment_entries = []
    for embodiment in dataset.embodiments:
        if embodiment.name in config.BUILTIN_EMBODIMENTS:
            embodiment_entries.append({"name": embodiment.name})
            continue
        hands_dir = out_dir / "hands"
        hands_dir.mkdir(exist_ok=True)
        urdf_path = hands_dir / f"{embodiment.name}.urdf"
        urdf_path.write_text(tree_to_urdf(embodiment.tree), encoding="utf-8")
        mapping_path = save_mapping(embodiment.mapping, hands_dir / f"{embodiment.name}.mapping.json")
        embodiment_entries.append(
            {
                "name": embodiment.name,
                "urdf": str(urdf_path.relative_to(out_dir)),
                "mapping": str(mapping_path.relative_to(out_dir)),
            }
        )

    object_entries = []
    for obj in dataset.objects:
        cloud_path = out_dir / "objects" / f"{obj.name}.xyz"
        columns = obj.points if obj.normals is None else np.hstack([obj.points, obj.normals])
        np.savetxt(cloud_path, columns, fmt="%.17g")
        entry = {"id": obj.name, "cloud_path": str(cloud_path.relative_to(out_dir)), "scale": 1.0}
        if obj.has_mesh:
            mesh_path = save_object_ply(obj, out_dir / "objects" / f"{obj.name}.ply")
            entry["mesh_path"] = str(mesh_path.relative_to(out_dir))
        object_entries.append(entry)

    write_records(
        dataset.records,
        out_dir / RECORDS_FILE,
        [e.name for e in dataset.embodiments],
        dataset.object_ids,
    )
    manifest = {
        "embodiments": embodiment_entries,
        "objects": object_entries,
        "records_path": RECORDS_FILE,
        "splits": dataset.splits,
    }
    manifest_path = out_dir / MANIFEST_FILE
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
    logger.info(f"Dataset guardado en {out_dir}: {len(dataset)} registros")
    return manifest_path
