"""Exception hierarchy shared by all modules."""


class CartwrightError(Exception):
    """Base class for every error raised by the package."""


class DomainError(CartwrightError, ValueError):
    """Input outside the mathematical domain of an operation."""


class MonotonicityError(DomainError):
    """A weight or profile that should be strictly monotone is not."""


class AccuracyError(CartwrightError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance within budget.

    ``estimates`` holds the last two estimates produced before giving up.
    """

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)


class BracketError(CartwrightError, ValueError):
    """A root-finding bracket does not contain a sign change."""


class ConstructionError(CartwrightError, RuntimeError):
    """A derived object (patched weight, surface, ODE solution) cannot be built."""


class InvariantViolation(CartwrightError, AssertionError):
    """A hard invariant checked at runtime does not hold."""


class PreconditionError(CartwrightError, ValueError):
    """Input rejected because a stated hypothesis fails on the sampled grid.

    ``location`` describes where the violation was detected.
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location
