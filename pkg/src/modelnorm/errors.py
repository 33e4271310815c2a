"""Exception hierarchy.

Everything raised on purpose derives from :class:`ModelNormError`, so callers
(the CLI in particular) can separate bad input from genuine bugs.
"""


class ModelNormError(Exception):
    """Base class for all library errors."""


class ConfigError(ModelNormError, ValueError):
    """Invalid configuration value (grid size, tolerance, degree cap)."""


class DomainError(ModelNormError, ValueError):
    """A point that must lie in Omega_+ does not."""


class PoleError(ModelNormError, ZeroDivisionError):
    """Evaluation at (or numerically at) a pole."""


class PoleOnBoundaryError(PoleError):
    """A function has a pole on a quadrature node that rotation cannot avoid."""


class DimensionError(ModelNormError, ValueError):
    """Shape mismatch between matrix functions."""


class SingularMobiusError(ModelNormError, ValueError):
    """Mobius map with ad - bc == 0."""


class NotUnitaryError(ModelNormError, ValueError):
    pass


class ZeroVectorError(ModelNormError, ValueError):
    pass


class NotInnerError(ModelNormError, ValueError):
    """Matrix function fails the contractive/boundary-unitary test."""


class RankDeficiencyError(ModelNormError, ArithmeticError):
    """Gram matrix of a candidate basis is numerically singular."""


class NotInSpaceError(ModelNormError, ValueError):
    """Function is not in the model space to tolerance."""


class LimitDivergedError(ModelNormError, ArithmeticError):
    """A limit at infinity that should be finite is not."""


class AllUnitSingularValuesError(ModelNormError, ArithmeticError):
    """Strict-contraction branch selected but every singular value equals one."""


class ConvergenceError(ModelNormError, ArithmeticError):
    """Quadrature did not converge before the grid cap."""


class SingularWeightError(ModelNormError, ArithmeticError):
    """det E_+ vanishes (numerically) at a quadrature node."""


class SingularEPlusError(ModelNormError, ArithmeticError):
    """E_+(alpha) is not invertible."""


class SchemaError(ModelNormError, ValueError):
    """Malformed JSON input."""
