"""Exception hierarchy shared by all modules."""


class IterZerosError(Exception):
    """Base class for every error raised by the package."""


class DegreeCapExceeded(IterZerosError):
    pass


class OrderMismatch(IterZerosError):
    pass


class NonFinite(IterZerosError):
    """An iterated jet overflowed; ``index`` is the iterate reached."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ZeroPolynomial(IterZerosError):
    pass


class NotConverged(IterZerosError):
    """Root iteration ran out of sweeps; ``cloud`` holds the partial result."""

    def __init__(self, message, cloud=None):
        super().__init__(message)
        self.cloud = cloud


class PreimageFailure(IterZerosError):
    pass


class GridMismatch(IterZerosError):
    pass


class NotInBasin(IterZerosError):
    pass


class SuperattractingUnsupported(IterZerosError):
    pass


class NotInPetal(IterZerosError):
    pass


class DegenerateParabolic(IterZerosError):
    pass


class DerivativeVanishes(IterZerosError):
    pass


class ConfigError(IterZerosError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
