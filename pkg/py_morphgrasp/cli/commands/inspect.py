"""
Comando 'inspect' - Resumen de una mano URDF.

Muestra la tabla de joints, los GDL, la máscara canónica, los conteos de
descendientes y un resumen de la matriz de morfología J.
"""

import logging
from pathlib import Path

import click
import numpy as np

from py_morphgrasp.core.reports import joint_table, mask_summary
from py_morphgrasp.exceptions import MorphGraspError
from py_morphgrasp.hand.embodiment import default_mapping_path, load_embodiment
from py_morphgrasp.kinematics.urdf import load_urdf
from py_morphgrasp.models.morphology import FEATURE_NAMES, extract_joint_morphology

logger = logging.getLogger(__name__)


@click.command()
@click.argument("urdf", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--mapping",
    type=click.Path(exists=True, dir_okay=False),
    help="Mapeo canónico JSON (por defecto <urdf>.mapping.json)",
)
def inspect(urdf, mapping):
    r"""
    Inspeccionar una mano URDF y su mapeo canónico.

    \b
    Ejemplos:
      morphgrasp inspect shadow.urdf
      morphgrasp inspect barrett.urdf --mapping barrett.mapping.json
    """
    click.echo(f"[INSPECT] Analizando {urdf}...")
    try:
        if mapping is None and not default_mapping_path(urdf).exists():
            tree = load_urdf(urdf)
            click.secho("[WARN] Sin mapeo canónico: solo se muestra el árbol", fg="yellow")
            click.echo(f"  Mano:  {tree.name}")
            click.echo(f"  GDL:   {tree.n_dof}")
            for joint in tree.joints:
                click.echo(f"    {joint.name:<24} {joint.kind:<10} {joint.parent_link} -> {joint.child_link}")
            return

        embodiment = load_embodiment(urdf, mapping)
        table = joint_table(embodiment)
        J = extract_joint_morphology(embodiment.tree, embodiment.mapping)
        active = embodiment.mask.astype(bool)

        click.echo("\n" + "=" * 60)
        click.echo(f"  Mano:              {embodiment.name}")
        click.echo(f"  GDL:               {embodiment.n_dof}")
        click.echo(f"  Links:             {len(embodiment.tree.links)}")
        click.secho(f"  {int(active.sum())} slots activos", bold=True)
        click.echo(f"  Máscara δ:         {mask_summary(embodiment)}")
        click.echo("=" * 60)
        click.echo(table.to_string(index=False))
        click.echo("\nMatriz J (filas activas):")
        for name, column in zip(FEATURE_NAMES, J[active].T):
            click.echo(f"  {name:<14} min={column.min():+.4f}  max={column.max():+.4f}  media={np.mean(column):+.4f}")
        click.echo(f"\n  Descendientes: {table['descendants'].tolist()}")

    except MorphGraspError as e:
        click.secho(f"\n[ERROR] {Path(urdf).name}: {e}", fg="red", err=True)
        raise click.Abort()

    except Exception as e:
        click.secho(f"\n[ERROR] Error al inspeccionar la mano: {e}", fg="red", err=True)
        logger.exception("Error en inspect")
        raise click.Abort()
