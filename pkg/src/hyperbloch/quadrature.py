"""Quadrature on the unit sphere and the weighted unit ball.

The ball measure ``d nu_alpha = (1 - |x|^2)^alpha d nu`` factors in polar
coordinates as ``n r^(n-1) (1 - r^2)^alpha dr`` times the normalized surface
measure.  Substituting ``u = r^2`` turns the radial part into the Jacobi
weight ``(n/2) u^(n/2 - 1) (1 - u)^alpha du`` on ``[0, 1]``, so Gauss-Jacobi
nodes give a rule that is spectrally accurate for integrands smooth in ``u``.

Sphere rules are product rules: a uniform trapezoid on the circle, and for
``n >= 3`` a Gauss-Jacobi rule in the first coordinate ``t`` (weight
``(1 - t^2)^((n-3)/2)``) times a rule on the sphere of one lower dimension.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special as sp

from .errors import ConfigurationError, EvaluationError, InputError, PrecisionError
from .specialfn import s_table

#: Default radial node count.
DEFAULT_RADIAL_NODES = 128
#: Default polynomial exactness of sphere rules.
DEFAULT_SPHERE_DEGREE = 64
#: Relative agreement required between successive node counts for ``c_m``.
CM_RTOL = 1e-9


def _frozen(a) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RadialRule:
    """Nodes and weights for ``int_0^1 g(r) n r^(n-1) (1 - r^2)^alpha dr``."""

    n: int
    alpha: float
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size


@dataclass(frozen=True)
class SphereRule:
    """Nodes on the unit sphere with weights summing to one."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: int

    @property
    def size(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class BallRule:
    """Product of a radial rule and a sphere rule."""

    radial: RadialRule
    sphere: SphereRule

    def __post_init__(self):
        if self.radial.n != self.sphere.n:
            raise ConfigurationError("radial and sphere rules disagree on the dimension")

    @property
    def n(self) -> int:
        return self.radial.n

    @property
    def alpha(self) -> float:
        return self.radial.alpha

    @property
    def shape(self) -> tuple[int, int]:
        return (self.radial.size, self.sphere.size)

    def points(self) -> np.ndarray:
        """Node coordinates with shape ``(radial, sphere, n)``."""
        return self.radial.nodes[:, None, None] * self.sphere.nodes[None, :, :]

    def weights(self) -> np.ndarray:
        """Product weights with shape ``(radial, sphere)``."""
        return np.outer(self.radial.weights, self.sphere.weights)


def _jacobi_unit(count: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule on ``[0, 1]`` for the weight ``(1 - u)^a u^b``."""
    x, w = sp.roots_jacobi(count, a, b)
    return (1.0 + x) / 2.0, w / 2.0 ** (a + b + 1.0)


@lru_cache(maxsize=32)
def _radial_cached(n: int, alpha: float, count: int) -> RadialRule:
    u, w = _jacobi_unit(count, alpha, n / 2.0 - 1.0)
    return RadialRule(n, alpha, _frozen(np.sqrt(u)), _frozen(0.5 * n * w))


def radial_rule(n: int, alpha: float, count: int = DEFAULT_RADIAL_NODES) -> RadialRule:
    """Gauss-Jacobi rule for the radial part of ``nu_alpha`` in dimension ``n``.

    The weights sum to ``(n/2) B(n/2, alpha + 1)``, which is ``nu_alpha`` of
    the ball.
    """
    if n < 2 or int(n) != n:
        raise InputError("dimension must be an integer >= 2")
    if not alpha > -1:
        raise InputError("alpha must exceed -1")
    if count < 1:
        raise InputError("node count must be positive")
    return _radial_cached(int(n), float(alpha), int(count))


def truncated_radial_rule(n: int, alpha: float, radius: float, count: int = DEFAULT_RADIAL_NODES) -> RadialRule:
    """Gauss-Legendre rule for ``n r^(n-1) (1 - r^2)^alpha dr`` on ``[0, radius]``.

    Used for integrals over the smaller ball ``radius * B``, where the weight
    is smooth and needs no endpoint treatment.
    """
    if not 0 < radius < 1:
        raise InputError("radius must lie in (0, 1)")
    x, w = np.polynomial.legendre.leggauss(count)
    r = radius * (1.0 + x) / 2.0
    weights = radius / 2.0 * w * n * r ** (n - 1) * (1.0 - r * r) ** alpha
    return RadialRule(int(n), float(alpha), _frozen(r), _frozen(weights))


@lru_cache(maxsize=32)
def _sphere_cached(n: int, degree: int) -> SphereRule:
    if n == 2:
        k = degree + 1
        theta = 2.0 * np.pi * np.arange(k) / k
        nodes = np.column_stack([np.cos(theta), np.sin(theta)])
        return SphereRule(2, _frozen(nodes), _frozen(np.full(k, 1.0 / k)), degree)
    lower = _sphere_cached(n - 1, degree)
    count = math.ceil((degree + 1) / 2)
    g = (n - 3) / 2.0
    t, wt = sp.roots_jacobi(count, g, g)
    wt = wt / wt.sum()
    s = np.sqrt(1.0 - t * t)
    nodes = np.concatenate(
        [np.column_stack([np.full(lower.size, ti), si * lower.nodes]) for ti, si in zip(t, s)]
    )
    weights = np.outer(wt, lower.weights).ravel()
    return SphereRule(n, _frozen(nodes), _frozen(weights), degree)


def sphere_rule(n: int, degree: int = DEFAULT_SPHERE_DEGREE) -> SphereRule:
    """Product rule on the unit sphere of ``R^n`` exact for polynomials of total degree ``<= degree``."""
    if n < 2 or int(n) != n:
        raise InputError("dimension must be an integer >= 2")
    if degree < 0:
        raise InputError("degree must be nonnegative")
    return _sphere_cached(int(n), int(degree))


def ball_rule(n: int, alpha: float, radial_nodes: int = DEFAULT_RADIAL_NODES,
              sphere_degree: int = DEFAULT_SPHERE_DEGREE) -> BallRule:
    """Product rule for ``nu_alpha`` on the unit ball."""
    return BallRule(radial_rule(n, alpha, radial_nodes), sphere_rule(n, sphere_degree))


def _check_finite(values: np.ndarray) -> np.ndarray:
    bad = ~np.isfinite(values)
    if np.any(bad):
        index = int(np.flatnonzero(bad)[0])
        raise EvaluationError(f"integrand is not finite at node {index}", index)
    return values


def integrate_sphere(f: Callable[[np.ndarray], np.ndarray], rule: SphereRule) -> float:
    """Approximate ``int_S f d sigma``; ``f`` maps an ``(J, n)`` array to ``(J,)`` values."""
    values = _check_finite(np.asarray(f(rule.nodes), dtype=float).reshape(rule.size))
    return float(rule.weights @ values)


def integrate_ball(f: Callable[[np.ndarray], np.ndarray], alpha: float, rule: BallRule) -> float:
    """Approximate ``int_B f d nu_alpha``; ``f`` maps ``(..., n)`` points to values."""
    if rule.alpha != alpha:
        raise ConfigurationError(f"rule was built for alpha={rule.alpha}, not {alpha}")
    values = np.asarray(f(rule.points()), dtype=float).reshape(rule.shape)
    _check_finite(values.ravel())
    return float(np.sum(rule.weights() * values))


def _inverse_cm(n: int, alpha: float, M: int, count: int) -> np.ndarray:
    u, w = _jacobi_unit(count, alpha, n / 2.0 - 1.0)
    w = 0.5 * n * w
    logu = np.log(u)
    m = np.arange(M + 1)
    total = np.zeros(M + 1)
    chunk = max(1, 2_000_000 // (M + 1))
    for start in range(0, count, chunk):
        sl = slice(start, start + chunk)
        S = s_table(n, M, np.sqrt(u[sl]))
        powers = np.exp(m[:, None] * logu[None, sl])
        total += (powers * S * S) @ w[sl]
    return total


_cm_lock = threading.Lock()
_cm_cache: dict[tuple[int, float], np.ndarray] = {}


def cm_coefficients(n: int, alpha: float, M: int) -> np.ndarray:
    """Coefficients ``c_m(alpha)`` for ``m = 0..M``.

    ``1 / c_m = n int_0^1 r^(2m+n-1) S_m(r)^2 (1 - r^2)^alpha dr`` is computed
    with Gauss-Jacobi rules of ``N`` and ``2N`` nodes; the node count doubles
    until every coefficient agrees to ``1e-9`` relative.  Results are cached
    per ``(n, alpha)`` and extended when a larger ``M`` is requested.

    Raises
    ------
    PrecisionError
        If no node count up to 32768 reaches the agreement target.
    """
    if n < 2 or int(n) != n:
        raise InputError("dimension must be an integer >= 2")
    if not alpha > -1:
        raise InputError("alpha must exceed -1")
    if M < 0:
        raise InputError("M must be nonnegative")
    key = (int(n), float(alpha))
    with _cm_lock:
        cached = _cm_cache.get(key)
        if cached is not None and cached.size > M:
            return cached[: M + 1]
        count = max(DEFAULT_RADIAL_NODES, M // 2 + 64)
        coarse = _inverse_cm(key[0], key[1], M, count)
        while True:
            fine = _inverse_cm(key[0], key[1], M, 2 * count)
            if np.all(np.abs(fine - coarse) <= CM_RTOL * np.abs(fine)):
                break
            count *= 2
            if count > 16384:
                raise PrecisionError("c_m quadrature did not converge")
            coarse = fine
        table = _frozen(1.0 / fine)
        _cm_cache[key] = table
        return table


def cm_coefficient(n: int, m: int, alpha: float) -> float:
    """Single coefficient ``c_m(alpha)`` (see :func:`cm_coefficients`)."""
    if m < 0 or int(m) != m:
        raise InputError("degree must be a nonnegative integer")
    return float(cm_coefficients(n, alpha, int(m))[m])


def c0_closed_form(n: int, alpha: float) -> float:
    """``c_0(alpha) = 1 / ((n/2) B(n/2, alpha + 1))``."""
    return 1.0 / (0.5 * n * sp.beta(0.5 * n, alpha + 1.0))
