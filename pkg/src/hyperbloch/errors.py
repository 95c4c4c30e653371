"""Exception hierarchy shared by all hyperbloch modules."""


class HyperblochError(Exception):
    """Base class for every error raised by this package."""


class InputError(HyperblochError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(HyperblochError, ValueError):
    """A mathematical quantity is undefined or outside the supported region."""


class NumericOverflowError(HyperblochError, ArithmeticError):
    """Rounding pushed a result outside the unit ball."""


class PrecisionError(HyperblochError, ArithmeticError):
    """A numerical procedure failed to reach its accuracy target."""


class ConfigurationError(HyperblochError, ValueError):
    """Incompatible objects were combined (for example a rule with the wrong weight)."""


class EvaluationError(HyperblochError, ArithmeticError):
    """An integrand produced a non-finite value.

    Attributes
    ----------
    index : int
        Flat index of the first offending quadrature node.
    """

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class TruncationError(HyperblochError, ArithmeticError):
    """A series needs more terms than the table holds.

    Attributes
    ----------
    needed_order : int
        Smallest truncation order meeting the requested tolerance.
    """

    def __init__(self, message: str, needed_order: int):
        super().__init__(message)
        self.needed_order = needed_order


class CoverageError(HyperblochError, ValueError):
    """A point is not covered by the lattice."""


class ConstructionError(HyperblochError, RuntimeError):
    """Lattice construction failed its covering audit.

    Attributes
    ----------
    worst_sample : numpy.ndarray
        Audit sample with the largest distance to the nearest center.
    """

    def __init__(self, message: str, worst_sample):
        super().__init__(message)
        self.worst_sample = worst_sample


class ResourceError(HyperblochError, RuntimeError):
    """A requested computation exceeds the configured resource budget."""


class RefusalError(HyperblochError, RuntimeError):
    """The atomic solver refused a configuration that is not contractive."""


class ConvergenceError(HyperblochError, RuntimeError):
    """An iteration hit its cap without converging.

    Attributes
    ----------
    history : list of float
        Residual norms recorded before giving up.
    """

    def __init__(self, message: str, history):
        super().__init__(message)
        self.history = list(history)
