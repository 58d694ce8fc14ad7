"""Exception hierarchy shared by all graphaug modules."""


class GraphAugError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(GraphAugError, ValueError):
    """Operand dimensions are incompatible."""


class ContractError(GraphAugError, ValueError):
    """A precondition of an operation was violated by the caller."""


class ConfigError(GraphAugError, ValueError):
    """Invalid hyperparameter or run configuration."""


class ParseError(GraphAugError, ValueError):
    """A data file could not be parsed.

    ``path`` and ``lineno`` are filled in when known.
    """

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f"{path}"
            if lineno is not None:
                where += f":{lineno}"
            where += ": "
        super().__init__(where + message)


class ValidationError(GraphAugError, ValueError):
    """Parsed data is well-formed but semantically invalid (e.g. id out of range)."""


class NumericalError(GraphAugError, FloatingPointError):
    """A loss or parameter became non-finite."""
