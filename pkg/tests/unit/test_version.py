"""Test para verificar la versión del proyecto."""


def test_package_version():
    """Verificar que la versión del paquete esté definida."""
    from py_morphgrasp import __version__

    assert __version__ == "0.1.0"
    assert isinstance(__version__, str)


def test_version_format():
    """Verificar que el formato de la versión sea correcto."""
    from py_morphgrasp import __version__

    # Verificar formato semver (major.minor.patch)
    parts = __version__.split(".")
    assert len(parts) == 3
    assert all(part.isdigit() for part in parts)


def test_cli_reports_version():
    """--version muestra el nombre del programa y la versión."""
    from click.testing import CliRunner

    from py_morphgrasp import __version__
    from py_morphgrasp.cli.main import cli

    result = CliRunner().invoke(cli, ["--version"])

    assert result.exit_code == 0
    assert "morphgrasp" in result.output
    assert __version__ in result.output
