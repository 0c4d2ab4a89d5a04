"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside the allowed range."""


class PreconditionError(ValueError):
    """Input function violates a required property (e.g. f(0) != 0)."""


class RangeError(ValueError):
    """Evaluation point lies outside the covered domain."""


class EvaluationError(RuntimeError):
    """A computation produced non-finite or unusable values."""


class DomainError(ValueError):
    """Time or coordinate argument outside the admissible domain."""


class SingularityError(ValueError):
    """Evaluation requested exactly at a kernel singularity."""


class DegenerateBasePointError(RuntimeError):
    """Bordered solve hit a vanishing scalar pivot."""
