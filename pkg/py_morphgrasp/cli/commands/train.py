"""
Comando 'train' - Entrenar el modelo de difusión.

La configuración se resuelve por completo (archivo + overrides) antes de
empezar y se escribe en el directorio de la ejecución.
"""

import logging

import click

from py_morphgrasp import config
from py_morphgrasp.cli.common import banner, fail
from py_morphgrasp.core.training import run_training
from py_morphgrasp.exceptions import MorphGraspError, NumericError

logger = logging.getLogger(__name__)


@click.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Configuración JSON/TOML")
@click.option(
    "--set",
    "overrides",
    multiple=True,
    metavar="SECCION.CLAVE=VALOR",
    help="Override de configuración (repetible), por ejemplo train.steps=50",
)
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False), help="Manifiesto del dataset")
@click.option("--seed", type=int, help="Semilla (train.seed)")
@click.option("--steps", type=int, help="Pasos de entrenamiento (train.steps)")
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Directorio de la ejecución")
@click.option("--resume", is_flag=True, help="Reanudar desde <out>/checkpoints/latest.ckpt")
def train(config_path, overrides, manifest, seed, steps, out, resume):
    r"""
    Entrenar el modelo con el dataset indicado.

    \b
    Sin --manifest se usa el dataset sintético de la pinza.

    \b
    Ejemplos:
      morphgrasp train --out runs/toy
      morphgrasp train --manifest data/manifest.json --config cfg.json --out runs/a
      morphgrasp train --out runs/toy --set loss.alpha_srf=0 --set train.steps=500
      morphgrasp train --out runs/toy --resume
    """
    click.echo("[TRAIN] Preparando el entrenamiento...")
    overrides = list(overrides)
    if manifest:
        overrides.append(f"train.manifest={manifest}")
    if seed is not None:
        overrides.append(f"train.seed={seed}")
    if steps is not None:
        overrides.append(f"train.steps={steps}")

    try:
        run_config = config.load_run_config(config_path, overrides)
    except (ValueError, OSError) as e:
        fail(f"Configuración inválida: {e}")

    try:
        result = run_training(run_config, out, resume=resume)

        banner("Entrenamiento completado")
        click.echo(f"  Pasos:          {result['steps']}")
        if result["first_loss"] is not None:
            click.echo(f"  Pérdida inicial: {result['first_loss']:.6f}")
            click.echo(f"  Pérdida final:   {result['final_loss']:.6f}")
        click.echo(f"  Checkpoint:     {result['checkpoint']}")
        click.echo(f"  Métricas:       {result['metrics_log']}")
        click.echo("=" * 60)

    except NumericError as e:
        click.secho(f"\n[ERROR] Pérdida no finita ({e.where}): {e}", fg="red", err=True)
        click.echo("Se conserva el último checkpoint válido", err=True)
        raise click.Abort()

    except FileNotFoundError as e:
        fail(f"Archivo no encontrado: {e}")

    except MorphGraspError as e:
        fail(str(e))

    except Exception as e:
        click.secho(f"\n[ERROR] Error durante el entrenamiento: {e}", fg="red", err=True)
        logger.exception("Error en train")
        raise click.Abort()
