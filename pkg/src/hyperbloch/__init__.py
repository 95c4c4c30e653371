"""Numerical analysis of hyperbolic-harmonic functions on the real unit ball.

Modules
-------
geometry
    Mobius transformations, pseudo-hyperbolic distance, pseudo-balls.
specialfn
    Gauss hypergeometric series, the radial factors ``S_m`` and zonal harmonics.
quadrature
    Sphere and weighted-ball rules, kernel coefficients ``c_m(alpha)``.
kernels
    Weighted Bergman reproducing kernels and the hyperbolic Poisson kernel.
operators
    Zonal expansions, Bergman projections, ``D^t_s`` and Bloch-norm estimates.
lattice
    r-lattices on a truncated ball and their partitions.
atomic
    Atomic decomposition by Neumann iteration.
suites, report, cli
    Verification suites, machine-readable reports and the command line.
"""

from .errors import (
    ConfigurationError,
    ConstructionError,
    ConvergenceError,
    CoverageError,
    DomainError,
    EvaluationError,
    HyperblochError,
    InputError,
    NumericOverflowError,
    PrecisionError,
    RefusalError,
    ResourceError,
    TruncationError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "ConstructionError",
    "ConvergenceError",
    "CoverageError",
    "DomainError",
    "EvaluationError",
    "HyperblochError",
    "InputError",
    "NumericOverflowError",
    "PrecisionError",
    "RefusalError",
    "ResourceError",
    "TruncationError",
    "__version__",
]
