"""
Comando 'mutate' - Generar variantes morfológicas de una mano.
"""

import logging
from dataclasses import replace
from pathlib import Path

import click

from py_morphgrasp.cli.common import banner, fail, hand_options, resolve_hand
from py_morphgrasp.core.reports import mask_summary
from py_morphgrasp.data.variations import SHADOW_VARIATION_GRID, MorphologyVariation, apply_variations
from py_morphgrasp.exceptions import MorphGraspError, MutationRefusedError
from py_morphgrasp.hand.canonical import save_mapping
from py_morphgrasp.hand.embodiment import Embodiment
from py_morphgrasp.kinematics.urdf import tree_to_urdf

logger = logging.getLogger(__name__)


def write_hand(tree, mapping, out_dir: Path, stem: str) -> Path:
    """Escribe ``<stem>.urdf`` y ``<stem>.mapping.json``; devuelve la ruta del URDF."""
    out_dir.mkdir(parents=True, exist_ok=True)
    urdf_path = out_dir / f"{stem}.urdf"
    urdf_path.write_text(tree_to_urdf(tree), encoding="utf-8")
    save_mapping(mapping, out_dir / f"{stem}.mapping.json")
    return urdf_path


@click.command()
@hand_options
@click.option(
    "--variation",
    "specs",
    multiple=True,
    help="Variación (repetible): 'remove index,ring', 'scale thumb 1.5', 'swap all allegro'",
)
@click.option("--allow-thumb", is_flag=True, help="Permitir quitar el pulgar")
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Directorio de salida")
@click.option("--grid", is_flag=True, help="Generar las 16 variantes de la rejilla de evaluación")
def mutate(urdf, mapping, hand, specs, allow_thumb, out, grid):
    r"""
    Quitar, escalar o sustituir dedos de una mano.

    \b
    Cada variante se escribe como URDF más su mapeo canónico.

    \b
    Ejemplos:
      morphgrasp mutate --hand shadow --variation "remove index,ring" --out hands/
      morphgrasp mutate --hand shadow --variation "scale all 0.8" --out hands/
      morphgrasp mutate --hand shadow --grid --out hands/grid
    """
    if not specs and not grid:
        raise click.UsageError("Indica al menos una --variation o usa --grid")

    try:
        base = resolve_hand(urdf, mapping, hand)
        out_dir = Path(out)
        if grid:
            rows = [(label, variations) for label, _, variations in SHADOW_VARIATION_GRID]
        else:
            variations = [v for spec in specs for v in MorphologyVariation.parse(spec)]
            rows = [("_".join(v.label for v in variations), variations)]

        click.echo(f"[MUTATE] Mano base '{base.name}': {int(base.mask.sum())} slots activos")
        click.echo(f"  δ = {mask_summary(base)}")
        written = []
        for label, variations in rows:
            tree, new_mapping = apply_variations(base.tree, base.mapping, variations, allow_thumb_removal=allow_thumb)
            name = f"{base.name}_{label}"
            new_mapping = replace(new_mapping, embodiment_name=name)
            variant = Embodiment(name=name, tree=tree, mapping=new_mapping)
            path = write_hand(tree, new_mapping, out_dir, variant.name)
            written.append(path)
            change = int(variant.mask.sum()) - int(base.mask.sum())
            click.echo(f"  {label:<22} {variant.n_dof:>3} GDL  ({change:+d} slots)  δ = {mask_summary(variant)}")

        banner(f"{len(written)} variantes generadas")
        for path in written:
            click.echo(f"  -> {path}")
        click.echo("=" * 60)

    except click.UsageError:
        raise

    except MutationRefusedError as e:
        fail(f"Variación rechazada: {e}")

    except MorphGraspError as e:
        fail(str(e))

    except Exception as e:
        click.secho(f"\n[ERROR] Error generando variantes: {e}", fg="red", err=True)
        logger.exception("Error en mutate")
        raise click.Abort()
