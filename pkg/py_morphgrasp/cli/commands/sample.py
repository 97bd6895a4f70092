"""
Comando 'sample' - Generar agarres con un modelo entrenado.
"""

import logging

import click

from py_morphgrasp import config
from py_morphgrasp.cli.common import banner, fail, hand_options, object_options, resolve_hand, resolve_object
from py_morphgrasp.core.sampling import ORIENTATION_MODES, run_sample
from py_morphgrasp.exceptions import CheckpointError, MorphGraspError
from py_morphgrasp.models.checkpoint import load_into, load_model, read_checkpoint
from py_morphgrasp.models.grasp_model import GraspDiffusionModel

logger = logging.getLogger(__name__)


@click.command()
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True, help="Checkpoint")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    help="Construir el modelo con esta configuración en lugar de la del checkpoint",
)
@object_options
@hand_options
@click.option("-n", "n", type=int, default=config.DEFAULT_SAMPLE_COUNT, show_default=True, help="Agarres")
@click.option("--seed", type=int, default=0, show_default=True, help="Semilla")
@click.option("--steps", type=int, help="Pasos del muestreo reespaciado (por defecto, T)")
@click.option(
    "--orientations",
    type=click.Choice(ORIENTATION_MODES),
    default="identity",
    show_default=True,
    help="Orientación del objeto respecto a la mano",
)
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Directorio de salida")
def sample(checkpoint, config_path, object_path, mesh, scale, urdf, mapping, hand, n, seed, steps, orientations, out):
    r"""
    Muestrear agarres para un objeto y una mano.

    \b
    Escribe poses canónicas y nativas, calidad por agarre y diversidad.

    \b
    Ejemplos:
      morphgrasp sample --checkpoint latest.ckpt --object esfera.xyz --hand toy_gripper --out out/
      morphgrasp sample --checkpoint latest.ckpt --object taza.ply --urdf mano.urdf -n 16 --steps 20 --out out/
    """
    click.echo("[SAMPLE] Cargando modelo y geometría...")
    try:
        embodiment = resolve_hand(urdf, mapping, hand)
        obj = resolve_object(object_path, mesh, scale)
        if config_path:
            model = GraspDiffusionModel.from_run_config(config.load_run_config(config_path))
            load_into(read_checkpoint(checkpoint), model)
        else:
            model, _ = load_model(checkpoint)

        result = run_sample(model, obj, embodiment, out, n=n, seed=seed, steps=steps, orientations=orientations)

        banner("Muestreo completado")
        click.echo(f"  Agarres:            {result['n']}")
        if result["diversity"] is not None:
            click.echo(f"  Diversidad:         {result['diversity']:.4f} rad")
        click.echo(f"  Segundos por agarre: {result['seconds_per_grasp']:.4f}")
        for path in result["files"]:
            click.echo(f"  -> {path}")
        click.echo("=" * 60)

    except click.UsageError:
        raise

    except CheckpointError as e:
        fail(f"Checkpoint incompatible: {e}")

    except (MorphGraspError, ValueError) as e:
        fail(str(e))

    except Exception as e:
        click.secho(f"\n[ERROR] Error durante el muestreo: {e}", fg="red", err=True)
        logger.exception("Error en sample")
        raise click.Abort()
