class TakagiError(Exception):
    """Base class for library errors."""


class InvalidInput(TakagiError, ValueError):
    pass


class ValidationError(TakagiError, ValueError):
    """A parameter point or curve failed (Cond)/(Ass)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ShapeError(TakagiError, ValueError):
    pass


class SingularDivision(TakagiError, ZeroDivisionError):
    pass


class DomainError(TakagiError, ValueError):
    pass


class RangeError(TakagiError, ValueError):
    pass


class EqualInputs(TakagiError, ValueError):
    pass


class ExhaustedError(TakagiError, ValueError):
    """Fewer one-digits than requested; ``found`` holds the positions seen."""

    def __init__(self, message, found=()):
        super().__init__(message)
        self.found = list(found)


class PrecisionExhausted(TakagiError, ArithmeticError):
    def __init__(self, message, achieved=float("nan"), terms=0):
        super().__init__(message)
        self.achieved = achieved
        self.terms = terms


class InstabilityError(TakagiError, ArithmeticError):
    def __init__(self, message, step=-1):
        super().__init__(message)
        self.step = step


class InconsistencyError(TakagiError, RuntimeError):
    pass
