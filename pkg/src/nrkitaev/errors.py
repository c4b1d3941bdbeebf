"""Exception hierarchy shared by all modules."""


class KitaevError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(KitaevError, ValueError):
    pass


class SingularDynamics(KitaevError, ArithmeticError):
    """The Sylvester operator has a (numerically) vanishing eigenvalue."""


class SizeGuard(KitaevError, ValueError):
    """Dense construction requested beyond its allowed system size."""


class PhysicalityViolation(KitaevError, ValueError):
    pass


class NotBracketed(KitaevError, ValueError):
    """A critical-point scan never triggered its criterion."""


class NotConverged(KitaevError, RuntimeError):
    pass


class FitDegenerate(KitaevError, ValueError):
    pass


class InsufficientData(KitaevError, ValueError):
    pass


class Undefined(KitaevError, ValueError):
    """A ratio observable whose denominator vanishes."""
