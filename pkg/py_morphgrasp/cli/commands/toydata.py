"""
Comando 'toydata' - Dataset sintético de agarres antipodales.
"""

import logging

import click

from py_morphgrasp.cli.common import banner, fail
from py_morphgrasp.data.dataset import save_dataset
from py_morphgrasp.data.toy import ToyConfig, generate_toy_dataset
from py_morphgrasp.exceptions import GenerationError

logger = logging.getLogger(__name__)


@click.command()
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Directorio del dataset")
@click.option("--seed", type=int, default=0, show_default=True, help="Semilla")
@click.option("--n-grasps", type=int, default=ToyConfig.n_grasps, show_default=True, help="Número de agarres")
@click.option(
    "--cloud-points", type=int, default=ToyConfig.cloud_points, show_default=True, help="Puntos por nube"
)
def toydata(out, seed, n_grasps, cloud_points):
    r"""
    Generar el dataset sintético de la pinza de dos dedos.

    \b
    Esferas y cajas con agarres antipodales resueltos en forma cerrada.

    \b
    Ejemplos:
      morphgrasp toydata --out data/toy
      morphgrasp toydata --out data/toy --n-grasps 64 --seed 3
    """
    click.echo("[TOYDATA] Generando agarres sintéticos...")
    try:
        dataset = generate_toy_dataset(ToyConfig(n_grasps=n_grasps, cloud_points=cloud_points), seed=seed)
        manifest = save_dataset(dataset, out)

        banner("Dataset sintético generado")
        click.echo(f"  Agarres:     {len(dataset)}")
        click.echo(f"  Objetos:     {', '.join(dataset.object_ids)}")
        click.echo(f"  Manifiesto:  {manifest}")
        click.echo("=" * 60)

    except GenerationError as e:
        fail(f"No se pudo generar el dataset: {e}")

    except Exception as e:
        click.secho(f"\n[ERROR] Error al generar el dataset: {e}", fg="red", err=True)
        logger.exception("Error en toydata")
        raise click.Abort()
