"""Exception types shared across the package."""


class CreepDamError(Exception):
    """Base class for all errors raised by creepdam."""


class DomainError(CreepDamError, ValueError):
    """An argument lies outside the domain where the model is defined."""


class SingularityError(CreepDamError, ArithmeticError):
    """Damage came too close to 1 for the rate laws to be evaluated."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class MeshFormatError(CreepDamError, ValueError):
    """A mesh file could not be parsed or violates a mesh invariant."""


class GeometryError(CreepDamError, ValueError):
    """Degenerate geometry requested from a mesh generator."""


class SolverError(CreepDamError, RuntimeError):
    """The equilibrium system could not be solved to the required residual."""


class RuptureImminent(CreepDamError):
    """The damage increment cap cannot be met even at the minimum step size."""


class PicardDiverged(CreepDamError):
    """The staggered fixed-point iteration failed to converge."""

    def __init__(self, message, ratios=()):
        super().__init__(message)
        self.ratios = list(ratios)


class ConfigError(CreepDamError, ValueError):
    """A scenario configuration is malformed; the message names the key path."""
