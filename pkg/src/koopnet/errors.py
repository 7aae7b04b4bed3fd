class KoopnetError(Exception):
    """Base class for every failure raised by koopnet."""


class ConfigError(KoopnetError):
    pass


class ShapeError(KoopnetError, ValueError):
    pass


class NonFiniteError(KoopnetError, ValueError):
    pass


class GraphError(KoopnetError, ValueError):
    pass


class DynamicsError(KoopnetError, ValueError):
    pass


class IntegrationError(KoopnetError):
    pass


class TaskDataError(KoopnetError):
    pass


class ArchitectureError(KoopnetError, ValueError):
    pass


class DivergenceError(KoopnetError):
    pass


class DegenerateDataError(KoopnetError, ValueError):
    pass


class SystemIdentificationError(KoopnetError):
    """Raised when a lifted regression cannot identify a system."""


class TrainingError(KoopnetError):
    pass


class MetricError(KoopnetError, ValueError):
    pass


class FormatError(KoopnetError):
    """Malformed on-disk document or binary file."""


class GraphMismatchError(KoopnetError):
    def __init__(self, expected: str, found: str, what: str = "graph"):
        self.expected = expected
        self.found = found
        super().__init__(f"{what} hash mismatch: expected {expected}, found {found}")


def wrap(where: str, e: BaseException) -> str:
    return f"--- Exception in {where} ---\n{e}"
