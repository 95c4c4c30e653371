"""Weighted Bergman reproducing kernels and the hyperbolic Poisson kernel.

The kernel of the weighted hyperbolic-harmonic Bergman space is the series

    R_alpha(x, y) = sum_m c_m(alpha) S_m(|x|) S_m(|y|) Z_m(x, y),

which converges geometrically in ``|x||y|``.  No closed form is known, so the
series is truncated at an order ``M`` chosen from an explicit majorant of the
tail.  The majorant is

    sum_{m > M} C m^p q^m,   q = |x||y|,   p = alpha + 2n - 3,

whose constant ``C = C_c C_S^2 C_Z`` combines the empirical bounds
``c_m <= C_c m^(alpha+1)``, ``S_m <= C_S m^(n/2-1)`` and
``dim H_m <= C_Z m^(n-2)``, each measured over ``1 <= m <= M_max``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, InputError, TruncationError
from .quadrature import cm_coefficients
from .specialfn import dim_hm, iter_zonal, s_derivative_table, s_normalizers, s_table

#: Default maximal truncation order of a kernel table.
DEFAULT_M_MAX = 400
#: Largest supported value of ``|x||y|``.
MAX_PRODUCT = 0.999
#: Smallest supported absolute tolerance.
MIN_TOLERANCE = 1e-12


def _tail_bound(C: float, p: float, q: float, M: int) -> float:
    """Closed-form bound for ``sum_{m > M} C m^p q^m`` (``inf`` if not yet geometric)."""
    if q == 0.0:
        return 0.0
    k = M + 1
    ratio = q * max(1.0, ((k + 1) / k) ** p)
    if ratio >= 1.0:
        return math.inf
    return C * math.exp(p * math.log(k) + k * math.log(q)) / (1.0 - ratio)


def truncation_order(C: float, p: float, q: float, tol: float, limit: int = 10**7) -> int:
    """Smallest ``M`` whose tail bound is below ``tol``."""
    if q == 0.0:
        return 0
    lo = 0
    hi = 1
    while _tail_bound(C, p, q, hi) >= tol:
        lo = hi
        hi *= 2
        if hi > limit:
            raise TruncationError("truncation order exceeds any practical limit", limit)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _tail_bound(C, p, q, mid) < tol:
            hi = mid
        else:
            lo = mid
    return hi if _tail_bound(C, p, q, lo) >= tol else lo


def _empirical_constants(n: int, M_max: int) -> tuple[float, float]:
    """``C_S`` and ``C_Z`` measured over ``1 <= m <= M_max``."""
    m = np.arange(1, M_max + 1, dtype=float)
    # S_m is largest at r = 0, where it equals 1 / F(m, 1 - n/2; m + n/2; 1).
    c_s = float(np.max(1.0 / s_normalizers(n, M_max)[1:] / m ** (n / 2.0 - 1.0)))
    dims = np.array([dim_hm(n, k) for k in range(1, M_max + 1)], dtype=float)
    c_z = float(np.max(dims / m ** (n - 2.0)))
    return c_s, c_z


def poisson_truncation_order(n: int, q: float, tol: float) -> int:
    """Order ``M`` after which the Poisson series tail at ``|x| = q`` is below ``tol``."""
    c_s, c_z = _empirical_constants(n, 2000)
    return truncation_order(c_s * c_z, n / 2.0 - 1.0 + n - 2.0, q, tol)


@dataclass
class KernelTable:
    """Cached coefficients ``c_m(alpha)`` and tail-bound constants for ``R_alpha``.

    The coefficient table is filled lazily on first use (under a lock) and is
    read-only afterwards.

    Parameters
    ----------
    n : int
        Dimension.
    alpha : float
        Weight exponent, ``alpha > -1``.
    M_max : int
        Largest truncation order the table supports.
    """

    n: int
    alpha: float
    M_max: int = DEFAULT_M_MAX
    _coef: np.ndarray | None = field(default=None, init=False, repr=False)
    _const: float = field(default=0.0, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        if self.n < 2 or int(self.n) != self.n:
            raise InputError("dimension must be an integer >= 2")
        if not self.alpha > -1:
            raise InputError("alpha must exceed -1")
        if self.M_max < 1:
            raise InputError("M_max must be at least 1")

    def _fill(self) -> None:
        with self._lock:
            if self._coef is not None:
                return
            coef = cm_coefficients(self.n, self.alpha, self.M_max)
            m = np.arange(1, self.M_max + 1, dtype=float)
            c_c = float(np.max(coef[1:] / m ** (self.alpha + 1.0)))
            c_s, c_z = _empirical_constants(self.n, self.M_max)
            self._const = c_c * c_s * c_s * c_z
            self._coef = coef

    @property
    def coefficients(self) -> np.ndarray:
        """``c_m(alpha)`` for ``m = 0..M_max``."""
        if self._coef is None:
            self._fill()
        return self._coef

    @property
    def power(self) -> float:
        """Exponent ``p`` of the tail majorant ``C m^p q^m``."""
        return self.alpha + 2.0 * self.n - 3.0

    @property
    def majorant_constant(self) -> float:
        if self._coef is None:
            self._fill()
        return self._const

    def tail_bound(self, M: int, q: float, extra_power: float = 0.0) -> float:
        """Bound on the kernel series tail beyond order ``M`` at ``|x||y| = q``."""
        return _tail_bound(self.majorant_constant, self.power + extra_power, q, M)

    def order_for(self, q: float, tol: float, extra_power: float = 0.0) -> int:
        """Truncation order meeting ``tol`` at ``|x||y| = q``.

        Raises
        ------
        DomainError
            If ``q > 0.999``.
        TruncationError
            If the needed order exceeds ``M_max``.
        """
        if q > MAX_PRODUCT:
            raise DomainError(f"|x||y| = {q:.6g} exceeds the supported limit {MAX_PRODUCT}")
        if tol < MIN_TOLERANCE:
            raise InputError(f"tolerance must be at least {MIN_TOLERANCE}")
        M = truncation_order(self.majorant_constant, self.power + extra_power, q, tol)
        if M > self.M_max:
            raise TruncationError(f"kernel series needs order {M} > M_max = {self.M_max}", M)
        return M


@lru_cache(maxsize=64)
def kernel_table(n: int, alpha: float, M_max: int = DEFAULT_M_MAX) -> KernelTable:
    """Shared :class:`KernelTable` per ``(n, alpha, M_max)``."""
    return KernelTable(int(n), float(alpha), int(M_max))


def _radial_rows(table_fn, n: int, M: int, radii: np.ndarray) -> np.ndarray:
    """Evaluate a degree table at the distinct radii and scatter back to ``radii.shape``."""
    uniq, inv = np.unique(radii.ravel(), return_inverse=True)
    return table_fn(n, M, uniq)[:, inv].reshape((M + 1,) + radii.shape)


def _prepare(table: KernelTable, x, y) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != table.n or y.shape[-1] != table.n:
        raise InputError("point dimension does not match the kernel table")
    x, y = np.broadcast_arrays(x, y)
    rx = np.linalg.norm(x, axis=-1)
    ry = np.linalg.norm(y, axis=-1)
    if np.any(rx >= 1.0) or np.any(ry >= 1.0):
        raise InputError("kernel arguments must lie in the open unit ball")
    return x, y, rx, ry


def kernel_eval(table: KernelTable, x, y, tol: float = 1e-12, M: int | None = None) -> np.ndarray | float:
    """Evaluate ``R_alpha(x, y)`` by its truncated series.

    Parameters
    ----------
    table : KernelTable
    x, y : array_like, shape (..., n)
        Broadcast against each other, so a kernel matrix is obtained from
        ``x[:, None, :]`` and ``y[None, :, :]``.
    tol : float
        Absolute bound on the neglected tail (at least ``1e-12``).
    M : int, optional
        Explicit truncation order; overrides ``tol``.

    Returns
    -------
    float or numpy.ndarray
        Kernel values; symmetric in ``(x, y)`` bit for bit.
    """
    x, y, rx, ry = _prepare(table, x, y)
    q = float(np.max(rx * ry)) if rx.size else 0.0
    if M is None:
        M = table.order_for(q, tol)
    elif M > table.M_max:
        raise TruncationError(f"requested order {M} exceeds M_max = {table.M_max}", M)
    coef = table.coefficients
    sx = _radial_rows(s_table, table.n, M, rx)
    sy = _radial_rows(s_table, table.n, M, ry)
    out = np.zeros(rx.shape)
    for m, z in iter_zonal(table.n, x, y, M):
        out += coef[m] * (sx[m] * sy[m]) * z
    return float(out) if out.ndim == 0 else out


def kernel_gradient(table: KernelTable, x, y, tol: float = 1e-12, M: int | None = None) -> np.ndarray:
    """Gradient of ``R_alpha(x, y)`` in ``x`` by termwise differentiation.

    Each term contributes ``c_m S_m(|y|) (S_m'(|x|) x/|x| Z_m + S_m(|x|) grad Z_m)``.
    The truncation order accounts for the extra factor ``m`` from
    differentiation.
    """
    x, y, rx, ry = _prepare(table, x, y)
    q = float(np.max(rx * ry)) if rx.size else 0.0
    if M is None:
        M = table.order_for(q, tol, extra_power=1.0)
    elif M > table.M_max:
        raise TruncationError(f"requested order {M} exceeds M_max = {table.M_max}", M)
    coef = table.coefficients
    sx = _radial_rows(s_table, table.n, M, rx)
    dsx = _radial_rows(s_derivative_table, table.n, M, rx)
    sy = _radial_rows(s_table, table.n, M, ry)
    safe = np.where(rx > 0, rx, 1.0)
    xhat = x / safe[..., None]
    out = np.zeros(x.shape)
    for m, z, gz in iter_zonal(table.n, x, y, M, grad=True):
        w = coef[m] * sy[m]
        out += w[..., None] * (dsx[m][..., None] * xhat * z[..., None] + sx[m][..., None] * gz)
    return out


def poisson_eval(x, zeta) -> np.ndarray | float:
    """Closed-form hyperbolic Poisson kernel ``(1 - |x|^2)^(n-1) / |x - zeta|^(2(n-1))``."""
    x = np.asarray(x, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    n = x.shape[-1]
    xx = np.einsum("...i,...i->...", x, x)
    if np.any(xx >= 1.0):
        raise InputError("x must lie in the open unit ball")
    d2 = np.einsum("...i,...i->...", x - zeta, x - zeta)
    out = ((1.0 - xx) / d2) ** (n - 1)
    return float(out) if np.ndim(out) == 0 else out


def poisson_series(x, zeta, tol: float = 1e-12, M: int | None = None) -> np.ndarray | float:
    """Partial sums ``sum_{m <= M} S_m(|x|) Z_m(x, zeta)`` of the Poisson kernel series."""
    x = np.asarray(x, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    n = x.shape[-1]
    x, zeta = np.broadcast_arrays(x, zeta)
    rx = np.linalg.norm(x, axis=-1)
    if M is None:
        q = float(np.max(rx)) if rx.size else 0.0
        if q > MAX_PRODUCT:
            raise DomainError("series evaluation is limited to |x| <= 0.999")
        M = poisson_truncation_order(n, q, tol)
    sx = _radial_rows(s_table, n, M, rx)
    out = np.zeros(rx.shape)
    for m, z in iter_zonal(n, x, zeta, M):
        out += sx[m] * z
    return float(out) if out.ndim == 0 else out


def kernel_matrix(table: KernelTable, x, y, tol: float = 1e-10, block: int = 256) -> np.ndarray:
    """Matrix ``R_alpha(x_i, y_j)`` of shape ``(len(x), len(y))``.

    Rows and columns are grouped by norm into blocks, and each block pair is
    truncated at the order its own largest ``|x||y|`` requires, so pairs
    near the origin do not pay for the ones near the boundary.  When ``x`` and
    ``y`` are the same array only the upper block triangle is evaluated.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    same = x is y or (x.shape == y.shape and np.array_equal(x, y))
    rx = np.linalg.norm(x, axis=1)
    ry = np.linalg.norm(y, axis=1)
    ox = np.argsort(rx, kind="stable")
    oy = np.argsort(ry, kind="stable")
    bx = [ox[i:i + block] for i in range(0, len(ox), block)]
    by = [oy[j:j + block] for j in range(0, len(oy), block)]
    out = np.empty((len(x), len(y)))
    for i, ix in enumerate(bx):
        for j, iy in enumerate(by):
            if same and j < i:
                continue
            M = table.order_for(float(rx[ix].max() * ry[iy].max()), tol)
            vals = kernel_eval(table, x[ix][:, None, :], y[iy][None, :, :], M=M)
            out[np.ix_(ix, iy)] = vals
            if same and j > i:
                out[np.ix_(iy, ix)] = vals.T
    return out
