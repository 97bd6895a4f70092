"""
Comando 'encode' - Volcado de la representación morfológica de una mano.

Escribe el árbol cinemático, J, las matrices estructurales del árbol canónico y M (del checkpoint
indicado o de un modelo inicializado con la semilla) en JSON.
"""

import json
import logging
from pathlib import Path

import click
import torch

from py_morphgrasp.cli.common import fail, hand_options, resolve_hand
from py_morphgrasp.config import load_run_config
from py_morphgrasp.exceptions import MorphGraspError
from py_morphgrasp.models.checkpoint import load_model
from py_morphgrasp.models.grasp_model import GraspDiffusionModel
from py_morphgrasp.models.morphology import FEATURE_NAMES, build_graph_structure

logger = logging.getLogger(__name__)


@click.command()
@hand_options
@click.option(
    "--checkpoint",
    type=click.Path(exists=True, dir_okay=False),
    help="Checkpoint del modelo (si falta, pesos iniciales con --seed)",
)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Configuración")
@click.option("--seed", type=int, default=0, show_default=True, help="Semilla de los pesos iniciales")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Archivo JSON de salida")
def encode(urdf, mapping, hand, checkpoint, config_path, seed, out):
    r"""
    Volcar J, estructura y M de una mano.

    \b
    Ejemplos:
      morphgrasp encode --hand shadow --out shadow_morph.json
      morphgrasp encode --urdf mano.urdf --checkpoint latest.ckpt --out m.json
    """
    click.echo("[ENCODE] Codificando la morfología de la mano...")
    try:
        embodiment = resolve_hand(urdf, mapping, hand)
        if checkpoint:
            model, _ = load_model(checkpoint)
            source = f"checkpoint {checkpoint}"
        else:
            torch.manual_seed(seed)
            model = GraspDiffusionModel.from_run_config(load_run_config(config_path))
            source = f"pesos iniciales (semilla {seed})"

        J, delta = model.joint_morphology(embodiment)
        structure = build_graph_structure()
        model.eval()
        with torch.no_grad():
            M, _ = model.encode_morphology(embodiment)

        payload = {
            "embodiment": embodiment.name,
            "source": source,
            "tree": embodiment.tree.to_dict(),
            "feature_names": list(FEATURE_NAMES),
            "delta": [int(v) for v in delta],
            "J": J.tolist(),
            "structure": {
                "adjacency": structure.adjacency.tolist(),
                "parent": structure.parent.tolist(),
                "child": structure.child.tolist(),
                "spd": structure.spd.tolist(),
            },
            "M": M.double().numpy().tolist(),
        }
        out_path = Path(out)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(json.dumps(payload), encoding="utf-8")

        click.echo(f"  Mano:    {embodiment.name}")
        click.echo(f"  Origen:  {source}")
        click.echo(f"  J:       {J.shape[0]}x{J.shape[1]}   M: {tuple(M.shape)}")
        click.secho(f"\n[OK] Representación escrita en {out_path}", fg="green")

    except click.UsageError:
        raise

    except (MorphGraspError, ValueError) as e:
        fail(str(e))

    except Exception as e:
        click.secho(f"\n[ERROR] Error al codificar la morfología: {e}", fg="red", err=True)
        logger.exception("Error en encode")
        raise click.Abort()
