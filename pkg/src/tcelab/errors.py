"""Exception hierarchy shared by every module."""


class TCEError(ValueError):
    """Base class for contract violations raised by :mod:`tcelab`."""


class NonPositiveLength(TCEError):
    pass


class NotAPermutation(TCEError):
    pass


class OutOfDomain(TCEError):
    pass


class ReturnTimeExceeded(TCEError):
    """A point failed to return to the target interval within the iterate cap."""

    def __init__(self, point, cap):
        super().__init__(f"point {point} did not return within {cap} iterates")
        self.point = point
        self.cap = cap


class BadSimplex(TCEError):
    pass


class BadPermutation(TCEError):
    pass


class LambdaOutOfRange(TCEError):
    pass


class BelowBaseline(TCEError):
    pass


class NOutOfRange(TCEError):
    pass


class NotAnIET(TCEError):
    pass


class RuntimeGuard(RuntimeError):
    """Raised when a numerical safety net trips (diverging orbit, iterate cap)."""


class CapExceeded(RuntimeGuard):
    pass


class OrbitDiverged(RuntimeGuard):
    pass
