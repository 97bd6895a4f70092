"""
Comando 'eval' - Evaluar la calidad y la diversidad de un lote de agarres.
"""

import logging

import click

from py_morphgrasp.cli.common import banner, fail, hand_options, object_options, read_poses, resolve_hand, resolve_object
from py_morphgrasp.core.metrics import diversity, grasp_quality
from py_morphgrasp.core.reports import export_csv, quality_table, summarize_quality
from py_morphgrasp.exceptions import MorphGraspError

logger = logging.getLogger(__name__)


@click.command("eval")
@click.option("--poses", type=click.Path(exists=True, dir_okay=False), required=True, help="poses.json")
@object_options
@hand_options
@click.option("--out", type=click.Path(dir_okay=False), help="CSV con una fila por agarre")
def evaluate(poses, object_path, mesh, scale, urdf, mapping, hand, out):
    r"""
    Evaluar penetración, contactos y diversidad de poses ya generadas.

    \b
    Ejemplos:
      morphgrasp eval --poses out/poses.json --object esfera.xyz --hand toy_gripper
      morphgrasp eval --poses out/poses.json --object taza.ply --urdf mano.urdf --out calidad.csv
    """
    click.echo("[EVAL] Evaluando agarres...")
    try:
        embodiment = resolve_hand(urdf, mapping, hand)
        obj = resolve_object(object_path, mesh, scale)
        grasps = read_poses(poses)

        df = quality_table([grasp_quality(p, embodiment, obj) for p in grasps])
        means = summarize_quality(df)

        banner(f"{len(grasps)} agarres evaluados")
        click.echo(f"  Penetración máxima media: {means['mean_max_penetration'] * 1000:.2f} mm")
        click.echo(f"  Contactos medios:         {means['mean_contact_count']:.1f}")
        click.echo(f"  Holgura mínima media:     {means['mean_min_clearance'] * 1000:.2f} mm")
        if len(grasps) >= 2:
            click.echo(f"  Diversidad:               {diversity(grasps):.4f} rad")
        else:
            click.echo("  Diversidad:               n/a (una sola pose)")
        if out:
            click.echo(f"  -> {export_csv(df, out)}")
        click.echo("=" * 60)

    except click.UsageError:
        raise

    except (MorphGraspError, ValueError) as e:
        fail(str(e))

    except Exception as e:
        click.secho(f"\n[ERROR] Error durante la evaluación: {e}", fg="red", err=True)
        logger.exception("Error en eval")
        raise click.Abort()
