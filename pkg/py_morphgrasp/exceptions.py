"""Jerarquía de excepciones del paquete."""

from typing import Optional, Union


class MorphGraspError(Exception):
    """Excepción base para todos los errores de py_morphgrasp."""

    pass


class URDFParseError(MorphGraspError, ValueError):
    """XML mal formado o vocabulario URDF no reconocido."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"{message} (línea {line})"
        super().__init__(message)


class KinematicStructureError(MorphGraspError, ValueError):
    """El grafo de links/joints no es un árbol con una única raíz."""

    pass


class JointValidationError(MorphGraspError, ValueError):
    """Un joint tiene atributos inválidos (límites, eje, mimic)."""

    pass


class ArityError(MorphGraspError, ValueError):
    """Número o forma de entradas incompatible con lo esperado."""

    pass


class JointLimitError(MorphGraspError, ValueError):
    """Ángulo fuera de los límites del joint en modo estricto."""

    pass


class GeometryError(MorphGraspError, ValueError):
    """Geometría degenerada (por ejemplo, área superficial nula)."""

    pass


class MappingError(MorphGraspError, ValueError):
    """Mapeo canónico inválido o incompatible con la pose."""

    pass


class EmbodimentError(MorphGraspError, ValueError):
    """La pose o la máscara pertenece a otro embodiment."""

    pass


class DegeneracyError(MorphGraspError, ValueError):
    """Representación de rotación 6-D degenerada."""

    pass


class FeatureError(MorphGraspError, ValueError):
    """No se pueden extraer rasgos morfológicos de un joint."""

    pass


class NumericError(MorphGraspError, ArithmeticError):
    """Aparecieron valores no finitos durante el cálculo."""

    def __init__(self, message: str, where: Optional[Union[str, int]] = None):
        self.where = where
        super().__init__(message)


class CapabilityError(MorphGraspError):
    """El objeto no tiene la información necesaria para la consulta."""

    pass


class MeshValidationError(MorphGraspError, ValueError):
    """La malla no es cerrada (watertight)."""

    pass


class DomainError(MorphGraspError, ValueError):
    """Argumento fuera del dominio de la operación."""

    pass


class TimestepRangeError(MorphGraspError, IndexError):
    """Paso de difusión fuera de [0, T)."""

    pass


class StateError(MorphGraspError, RuntimeError):
    """El modelo no está en un estado utilizable (sin checkpoint)."""

    pass


class CheckpointError(MorphGraspError):
    """Checkpoint corrupto o con dimensiones incompatibles."""

    pass


class GenerationError(MorphGraspError):
    """No se pudo construir un agarre sintético."""

    pass


class DatasetValidationError(MorphGraspError, ValueError):
    """Registro del dataset inconsistente con su embodiment."""

    def __init__(self, message: str, record_index: Optional[int] = None):
        self.record_index = record_index
        if record_index is not None:
            message = f"registro {record_index}: {message}"
        super().__init__(message)


class MutationRefusedError(MorphGraspError):
    """Variación morfológica rechazada (por ejemplo, quitar el pulgar)."""

    pass
