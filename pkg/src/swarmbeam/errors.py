"""Exception hierarchy shared by the analysis modules and the CLI."""


class SwarmBeamError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(SwarmBeamError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateGeometryError(SwarmBeamError, ValueError):
    """The geometry collapses a formula (collinear sub-arrays, coincident points)."""


class OutOfRegimeError(SwarmBeamError, ValueError):
    """A limiting law was requested outside the parameter range where it is defined."""


class ResourceGuardError(SwarmBeamError, RuntimeError):
    """A run would exceed the memory guard and was not forced."""


class ConfigError(SwarmBeamError, ValueError):
    """Invalid experiment configuration; ``path`` names the offending section/key."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
