"""Exception hierarchy shared by all torusfield modules."""


class TorusFieldError(ValueError):
    """Base class for every error raised by this package."""


class FamilyMismatchError(TorusFieldError):
    pass


class DimensionMismatchError(TorusFieldError):
    pass


class PreconditionError(TorusFieldError):
    pass


class BudgetError(TorusFieldError):
    """A requested tolerance cannot be certified within the cutoff cap."""


class DivergenceError(TorusFieldError):
    pass


class SymmetryError(TorusFieldError):
    pass


class WeightError(TorusFieldError):
    pass
