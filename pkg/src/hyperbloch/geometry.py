"""Möbius geometry of the real unit ball.

Points are plain numpy arrays whose last axis holds the coordinates, so every
function here broadcasts over leading axes.  Interior points must satisfy
``|x| <= 1 - 1e-9``; boundary points (used only by :func:`bracket`) may have
unit norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericOverflowError

#: Largest norm accepted for an interior point.
BOUNDARY_MARGIN = 1e-9


def _as_points(x, name: str = "x", *, boundary: bool = False) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] < 2:
        raise InputError(f"{name} must have a trailing coordinate axis of length >= 2")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite coordinates")
    norms = np.linalg.norm(arr, axis=-1)
    limit = 1.0 + 1e-14 if boundary else 1.0 - BOUNDARY_MARGIN
    if np.any(norms > limit):
        kind = "closed" if boundary else "open"
        raise InputError(f"{name} lies outside the {kind} unit ball (max norm {norms.max():.17g})")
    return arr


def _check_dims(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[-1] != y.shape[-1]:
        raise InputError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")


def _dot(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", x, y)


def bracket(x, y) -> np.ndarray:
    """Return ``[x, y] = sqrt(1 - 2<x,y> + |x|^2 |y|^2)``.

    Either argument may lie on the unit sphere.  The radicand is clipped at
    zero before the square root, which only matters when ``x = y`` is a
    boundary point.

    Parameters
    ----------
    x, y : array_like, shape (..., n)

    Returns
    -------
    numpy.ndarray
        Bracket values with the broadcast leading shape.
    """
    x = _as_points(x, "x", boundary=True)
    y = _as_points(y, "y", boundary=True)
    _check_dims(x, y)
    arg = 1.0 - 2.0 * _dot(x, y) + _dot(x, x) * _dot(y, y)
    return np.sqrt(np.maximum(arg, 0.0))


def mobius(a, x) -> np.ndarray:
    """Apply the involution ``phi_a`` exchanging ``a`` and the origin.

    ``phi_a(x) = (a|x - a|^2 + (1 - |a|^2)(a - x)) / [x, a]^2``.

    Raises
    ------
    NumericOverflowError
        If rounding produces a point with norm >= 1.
    """
    a = _as_points(a, "a")
    x = _as_points(x, "x")
    _check_dims(a, x)
    diff = x - a
    aa = _dot(a, a)
    num = a * _dot(diff, diff)[..., None] + (1.0 - aa)[..., None] * (a - x)
    den = 1.0 - 2.0 * _dot(x, a) + _dot(x, x) * aa
    out = num / den[..., None]
    if np.any(_dot(out, out) >= 1.0):
        raise NumericOverflowError("Möbius image left the unit ball through rounding")
    return out


def mobius_jacobian_det(a, x) -> np.ndarray:
    """Absolute Jacobian determinant of ``phi_a`` at ``x``.

    Equals ``((1 - |phi_a(x)|^2) / (1 - |x|^2))^n``; it is evaluated in the
    algebraically equivalent form ``((1 - |a|^2) / [x, a]^2)^n`` which avoids
    the cancellation in ``1 - |phi_a(x)|^2``.
    """
    a = _as_points(a, "a")
    x = _as_points(x, "x")
    _check_dims(a, x)
    n = x.shape[-1]
    br2 = 1.0 - 2.0 * _dot(x, a) + _dot(x, x) * _dot(a, a)
    return ((1.0 - _dot(a, a)) / br2) ** n


def rho(a, b) -> np.ndarray:
    """Pseudo-hyperbolic distance ``|a - b| / [a, b]``."""
    a = _as_points(a, "a")
    b = _as_points(b, "b")
    _check_dims(a, b)
    return np.linalg.norm(a - b, axis=-1) / bracket(a, b)


def beta_dist(a, b) -> np.ndarray:
    """Hyperbolic distance ``log((1 + rho) / (1 - rho)) = 2 artanh(rho)``."""
    return 2.0 * np.arctanh(rho(a, b))


@dataclass(frozen=True)
class EuclideanBall:
    """Euclidean ball ``{y : |y - center| < radius}``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        if not self.radius > 0:
            raise InputError("radius must be positive")
        if np.linalg.norm(center) + self.radius >= 1.0 + 1e-12:
            raise InputError("ball is not contained in the unit ball")

    def contains(self, y) -> np.ndarray:
        """Boolean mask of points strictly inside the ball."""
        y = np.asarray(y, dtype=float)
        return np.linalg.norm(y - self.center, axis=-1) < self.radius


def pseudo_ball(a, r: float) -> EuclideanBall:
    """Pseudo-hyperbolic ball ``E_r(a) = {y : rho(y, a) < r}`` as a Euclidean ball.

    The center is ``(1 - r^2) a / (1 - |a|^2 r^2)`` and the radius is
    ``(1 - |a|^2) r / (1 - |a|^2 r^2)``.
    """
    if not 0.0 < r < 1.0:
        raise InputError(f"r must lie in (0, 1), got {r}")
    a = _as_points(a, "a")
    if a.ndim != 1:
        raise InputError("pseudo_ball expects a single center")
    aa = float(a @ a)
    den = 1.0 - aa * r * r
    return EuclideanBall((1.0 - r * r) * a / den, (1.0 - aa) * r / den)
