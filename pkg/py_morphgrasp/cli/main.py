"""
CLI Principal - Punto de entrada del comando 'morphgrasp'.

Este módulo implementa la interfaz de línea de comandos principal usando
Click. Cada subcomando vive en su propio módulo bajo ``commands``.
"""

import logging
import sys

import click

from py_morphgrasp import __version__, config


@click.group()
@click.version_option(version=__version__, prog_name="morphgrasp")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], case_sensitive=False),
    default=config.LOG_LEVEL,
    help="Nivel de logging (por defecto, variable LOG_LEVEL)",
)
@click.option(
    "--verbose", "-v", is_flag=True, help="Modo verbose (equivalente a --log-level DEBUG)"
)
@click.option(
    "--quiet", "-q", is_flag=True, help="Modo silencioso (equivalente a --log-level ERROR)"
)
def cli(log_level, verbose, quiet):
    r"""
    MorphGrasp CLI - Agarres diestros conscientes de la morfología de la mano.

    \b
    Comandos disponibles:
      inspect     Tabla de joints, máscara y descendientes de una mano
      encode      Volcado de J, matrices estructurales y M
      toydata     Dataset sintético de la pinza de dos dedos
      train       Entrenar el modelo de difusión
      sample      Generar agarres para un objeto y una mano
      eval        Calidad y diversidad de un archivo de poses
      mutate      Variaciones morfológicas (quitar, escalar, sustituir dedos)
      loss-audit  Todos los términos de pérdida de un archivo de poses

    \b
    Ejemplos:
      morphgrasp inspect shadow.urdf
      morphgrasp toydata --out data/toy
      morphgrasp train --manifest data/toy/manifest.json --out runs/toy
      morphgrasp sample --checkpoint runs/toy/checkpoints/latest.ckpt --object sphere.xyz --hand toy_gripper

    La variable de entorno MORPHGRASP_THREADS limita los hilos de torch.
    """
    # Determinar nivel de logging
    if quiet:
        log_level = "ERROR"
    elif verbose:
        log_level = "DEBUG"

    # Configurar logging
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format=config.LOG_FORMAT,
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    config.configure_threads()


# Importar y registrar comandos
from py_morphgrasp.cli.commands import encode as encode_cmd
from py_morphgrasp.cli.commands import evaluate as evaluate_cmd
from py_morphgrasp.cli.commands import inspect as inspect_cmd
from py_morphgrasp.cli.commands import loss_audit as loss_audit_cmd
from py_morphgrasp.cli.commands import mutate as mutate_cmd
from py_morphgrasp.cli.commands import sample as sample_cmd
from py_morphgrasp.cli.commands import toydata as toydata_cmd
from py_morphgrasp.cli.commands import train as train_cmd

cli.add_command(inspect_cmd.inspect)
cli.add_command(encode_cmd.encode)
cli.add_command(toydata_cmd.toydata)
cli.add_command(train_cmd.train)
cli.add_command(sample_cmd.sample)
cli.add_command(evaluate_cmd.evaluate)
cli.add_command(mutate_cmd.mutate)
cli.add_command(loss_audit_cmd.loss_audit)


def main():
    """Entry point para setup.py"""
    try:
        cli()
    except KeyboardInterrupt:
        click.echo("\n\n[!] Operación cancelada por el usuario", err=True)
        sys.exit(1)
    except Exception as e:
        click.echo(f"\n[ERROR] Error inesperado: {e}", err=True)
        logging.exception("Error inesperado")
        sys.exit(1)


if __name__ == "__main__":
    main()
