"""
Comando 'loss-audit' - Valores de las pérdidas físicas por pose.
"""

import logging

import click

from py_morphgrasp.cli.common import fail, hand_options, object_options, read_poses, resolve_hand, resolve_object
from py_morphgrasp.core.metrics import grasp_quality
from py_morphgrasp.exceptions import MorphGraspError

logger = logging.getLogger(__name__)


@click.command("loss-audit")
@click.option("--poses", type=click.Path(exists=True, dir_okay=False), required=True, help="poses.json")
@object_options
@hand_options
@click.option("--seed", type=int, default=0, show_default=True, help="Semilla del muestreo de superficie")
def loss_audit(poses, object_path, mesh, scale, urdf, mapping, hand, seed):
    r"""
    Mostrar SPF, ERF, SRF y |S| de cada pose.

    \b
    Ejemplo:
      morphgrasp loss-audit --poses out/poses.json --object esfera.xyz --hand toy_gripper
    """
    try:
        embodiment = resolve_hand(urdf, mapping, hand)
        obj = resolve_object(object_path, mesh, scale)
        grasps = read_poses(poses)

        click.echo(f"[AUDIT] {len(grasps)} poses de '{embodiment.name}' sobre '{obj.name}'")
        click.echo(f"  {'#':>4} {'spf':>10} {'erf':>10} {'srf':>10} {'|S|':>6} {'pen (mm)':>9}")
        for i, pose in enumerate(grasps):
            r = grasp_quality(pose, embodiment, obj, seed=seed)
            click.echo(
                f"  {i:>4} {r.spf:>10.6f} {r.erf:>10.6f} {r.srf:>10.6f} "
                f"{r.spf_members:>6d} {r.max_penetration * 1000:>9.3f}"
            )

    except click.UsageError:
        raise

    except (MorphGraspError, ValueError) as e:
        fail(str(e))

    except Exception as e:
        click.secho(f"\n[ERROR] Error en la auditoría: {e}", fg="red", err=True)
        logger.exception("Error en loss-audit")
        raise click.Abort()
