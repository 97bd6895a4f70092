"""
Opciones y utilidades compartidas por los subcomandos.
"""

import logging
from typing import List, Optional

import click

from py_morphgrasp import config
from py_morphgrasp.geometry.objects import ObjectModel, load_object
from py_morphgrasp.hand.canonical import CanonicalPose, poses_from_json
from py_morphgrasp.hand.embodiment import Embodiment, load_builtin_embodiment, load_embodiment

logger = logging.getLogger(__name__)


def hand_options(func):
    """--urdf / --mapping / --hand: una mano en disco o una de las incluidas."""
    func = click.option(
        "--hand",
        type=click.Choice(config.BUILTIN_EMBODIMENTS),
        help="Mano incluida en el paquete (alternativa a --urdf)",
    )(func)
    func = click.option(
        "--mapping",
        type=click.Path(exists=True, dir_okay=False),
        help="Mapeo canónico JSON (por defecto <urdf>.mapping.json)",
    )(func)
    func = click.option(
        "--urdf",
        type=click.Path(exists=True, dir_okay=False),
        help="URDF de la mano",
    )(func)
    return func


def object_options(func):
    func = click.option("--scale", type=float, default=1.0, show_default=True, help="Escala del objeto")(func)
    func = click.option(
        "--mesh",
        type=click.Path(exists=True, dir_okay=False),
        help="Malla cerrada para la SDF (PLY/OBJ/STL)",
    )(func)
    func = click.option(
        "--object",
        "object_path",
        type=click.Path(exists=True, dir_okay=False),
        required=True,
        help="Nube del objeto (.xyz con normales opcionales, o PLY)",
    )(func)
    return func


def resolve_hand(urdf: Optional[str], mapping: Optional[str], hand: Optional[str]) -> Embodiment:
    if urdf:
        return load_embodiment(urdf, mapping)
    if hand:
        return load_builtin_embodiment(hand)
    raise click.UsageError("Indica una mano con --urdf o con --hand")


def resolve_object(object_path: str, mesh: Optional[str], scale: float) -> ObjectModel:
    return load_object(object_path, mesh_path=mesh, scale=scale)


def read_poses(path: str) -> List[CanonicalPose]:
    with open(path, encoding="utf-8") as f:
        poses = poses_from_json(f.read())
    if not poses:
        raise ValueError(f"El archivo {path} no contiene poses")
    return poses


def fail(message: str):
    """Muestra el error en rojo y aborta con código 1."""
    click.secho(f"\n[ERROR] {message}", fg="red", err=True)
    raise click.Abort()


def banner(title: str):
    click.echo("\n" + "=" * 60)
    click.secho(f"[SUCCESS] {title}", fg="green", bold=True)
    click.echo("=" * 60)
