"""
Módulo de generación de informes.

Este módulo convierte los resultados de evaluación, las tablas de joints y el
log de métricas del entrenamiento en DataFrames de pandas y los exporta a
CSV o JSON.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import pandas as pd

from py_morphgrasp.core.losses import LOSS_TERMS, canonical_descendant_counts
from py_morphgrasp.core.metrics import QualityReport
from py_morphgrasp.hand.canonical import CANONICAL_LAYOUT
from py_morphgrasp.hand.embodiment import Embodiment

logger = logging.getLogger(__name__)

QUALITY_COLUMNS = ["max_penetration", "contact_count", "min_clearance", "spf", "erf", "srf", "spf_members"]
JOINT_COLUMNS = ["slot", "slot_name", "joint", "type", "lower", "upper", "descendants"]


def quality_table(reports: Sequence[QualityReport]) -> pd.DataFrame:
    """Una fila por agarre, indexada por su posición en el lote."""
    df = pd.DataFrame([r.to_dict() for r in reports], columns=QUALITY_COLUMNS)
    df.index.name = "grasp"
    return df


def export_csv(df: pd.DataFrame, output_file: Union[str, Path]) -> Path:
    """
    Exporta un DataFrame a CSV creando el directorio si no existe.

    Returns:
        Ruta del archivo escrito
    """
    output_path = Path(output_file)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(output_path, float_format="%.9g")
    logger.info(f"Datos exportados correctamente a {output_path}")
    logger.info(f"Total de registros exportados: {len(df)}")
    return output_path


def write_summary(values: Dict[str, Any], output_file: Union[str, Path]) -> Path:
    output_path = Path(output_file)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", encoding="utf-8") as f:
        json.dump(values, f, indent=2, sort_keys=True)
    return output_path


def joint_table(embodiment: Embodiment) -> pd.DataFrame:
    """Joints activos del embodiment con su slot canónico, límites y descendientes."""
    tree, mapping = embodiment.tree, embodiment.mapping
    counts = canonical_descendant_counts(tree, mapping)
    rows = []
    for joint_name, slot in zip(mapping.joint_names, mapping.slot_of):
        joint = tree.joint(joint_name)
        rows.append(
            {
                "slot": slot,
                "slot_name": CANONICAL_LAYOUT.slot_names[slot],
                "joint": joint_name,
                "type": joint.joint_type,
                "lower": joint.limit_lower,
                "upper": joint.limit_upper,
                "descendants": int(counts[slot]),
            }
        )
    return pd.DataFrame(rows, columns=JOINT_COLUMNS).sort_values("slot").reset_index(drop=True)


def load_metrics_log(path: Union[str, Path]) -> pd.DataFrame:
    """Log de métricas (JSON por línea) como DataFrame ordenado por paso."""
    df = pd.read_json(path, lines=True)
    if df.empty:
        return df
    return df.sort_values("step").reset_index(drop=True)


def summarize_training(metrics: pd.DataFrame, reference_step: Optional[int] = 10) -> Dict[str, Any]:
    """
    Resumen del log: pérdida de referencia, final y reducción relativa.

    La referencia es el paso ``reference_step`` (o el primero si el log es más corto).
    """
    if metrics.empty:
        return {"steps": 0}
    reference = metrics[metrics["step"] == reference_step] if reference_step is not None else metrics.iloc[:0]
    reference_row = reference.iloc[0] if not reference.empty else metrics.iloc[0]
    final_row = metrics.iloc[-1]
    summary = {
        "steps": int(final_row["step"]),
        "reference_step": int(reference_row["step"]),
        "reference_total": float(reference_row["total"]),
        "final_total": float(final_row["total"]),
    }
    if summary["reference_total"] > 0:
        summary["reduction"] = 1.0 - summary["final_total"] / summary["reference_total"]
    for name in LOSS_TERMS:
        summary[f"final_{name}"] = float(final_row[name])
    return summary


def summarize_quality(df: pd.DataFrame) -> Dict[str, float]:
    """Medias de la tabla de calidad."""
    if df.empty:
        return {}
    return {f"mean_{column}": float(df[column].mean()) for column in QUALITY_COLUMNS}


def mask_summary(embodiment: Embodiment) -> str:
    """Máscara δ como cadena de 0/1 agrupada por cadena canónica."""
    mask = embodiment.mask
    return " ".join("".join(str(int(mask[s])) for s in slots) for _, slots in CANONICAL_LAYOUT.chains)
