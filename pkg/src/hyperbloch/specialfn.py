"""Gauss hypergeometric series, the radial factors ``S_m`` and zonal harmonics.

The radial factor of degree ``m`` in dimension ``n`` is

    S_m(r) = F(m, 1 - n/2; m + n/2; r^2) / F(m, 1 - n/2; m + n/2; 1),

which makes ``S_m(|x|) q_m(x)`` the hyperbolic-harmonic extension of a degree
``m`` spherical harmonic ``q_m``.  In even dimensions the series terminates and
``S_m`` is a polynomial; in odd dimensions it is not.

Two evaluation paths are provided.  :func:`gauss_2f1` sums the series (or its
logarithmic continuation near ``z = 1``) for arbitrary parameters.  The table
functions :func:`s_table` and :func:`s_derivative_table` produce all degrees
``0..M`` at once by running the three-term recurrence in ``m`` backwards from
two series seeds, which is stable because the wanted solution is the minimal
one.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterator

import numpy as np
from scipy import special as sp

from .errors import DomainError, InputError, PrecisionError

#: Relative size below which a series term counts as negligible.
SERIES_EPS = 1e-16
#: Hard cap on the number of series terms.
MAX_SERIES_TERMS = 2_000_000
#: Use the logarithmic continuation when ``max(|a|, |b|) * (1 - z)`` is below this.
LOG_CASE_SPAN = 8.0


def _is_nonpos_int(v: np.ndarray) -> np.ndarray:
    return (v <= 0) & (v == np.round(v))


def _direct_series(a, b, c, z) -> np.ndarray:
    """Sum the hypergeometric series termwise for flat arrays."""
    total = np.ones_like(z)
    term = np.ones_like(z)
    quiet = np.zeros(z.shape, dtype=int)
    active = np.nonzero(z != 0)[0]
    k = 0
    while active.size:
        if k >= MAX_SERIES_TERMS:
            raise PrecisionError(f"hypergeometric series did not converge in {MAX_SERIES_TERMS} terms")
        ck = c[active] + k
        if np.any(ck == 0):
            raise DomainError("c + k hit zero before the series terminated")
        t = term[active] * (a[active] + k) * (b[active] + k) / (ck * (k + 1)) * z[active]
        term[active] = t
        s = total[active] + t
        total[active] = s
        small = np.abs(t) < SERIES_EPS * np.abs(s)
        quiet[active] = np.where(small, quiet[active] + 1, 0)
        done = (t == 0) | (quiet[active] >= 3)
        active = active[~done]
        k += 1
    return total


def _log_continuation(a, b, c, z) -> np.ndarray:
    """Evaluate ``F(a, b; a + b + N; z)`` for positive integer ``N`` near ``z = 1``.

    Uses the expansion in powers of ``w = 1 - z`` with the ``log w`` term
    that appears when ``c - a - b`` is a positive integer.  The gamma
    prefactors are formed through ``gammaln`` and ``gammasgn`` so large
    ``a`` is safe.
    """
    out = np.empty_like(z)
    N_all = np.rint(c - a - b).astype(int)
    for N in np.unique(N_all):
        idx = np.nonzero(N_all == N)[0]
        aa, bb, cc, w = a[idx], b[idx], c[idx], 1.0 - z[idx]
        # Gamma(c) / Gamma(a + N) and Gamma(c) / Gamma(a) as Pochhammer
        # ratios, which stay accurate when a is large.
        pre1 = math.gamma(N) * sp.poch(aa + N, bb) * sp.rgamma(bb + N)
        s1 = np.zeros_like(w)
        t1 = np.ones_like(w)
        for k in range(N):
            s1 += t1
            if k + 1 < N:
                t1 = t1 * (aa + k) * (bb + k) / ((k + 1) * (1 - N + k)) * w
        pre2 = -((-w) ** N) * sp.poch(aa, bb + N) * sp.rgamma(bb)
        logw = np.log(w)
        coef = np.full_like(w, 1.0 / math.factorial(N))
        s2 = np.zeros_like(w)
        quiet = np.zeros(w.shape, dtype=int)
        active = np.arange(w.size)
        k = 0
        while active.size:
            if k >= MAX_SERIES_TERMS:
                raise PrecisionError("logarithmic continuation did not converge")
            bracket = (
                logw[active]
                - sp.digamma(k + 1.0)
                - sp.digamma(k + N + 1.0)
                + sp.digamma(aa[active] + k + N)
                + sp.digamma(bb[active] + k + N)
            )
            t = coef[active] * bracket
            s = s2[active] + t
            s2[active] = s
            small = np.abs(t) < SERIES_EPS * np.abs(s)
            quiet[active] = np.where(small, quiet[active] + 1, 0)
            coef[active] = (
                coef[active] * (aa[active] + N + k) * (bb[active] + N + k) / ((k + 1) * (k + N + 1)) * w[active]
            )
            done = (quiet[active] >= 3) | (coef[active] == 0)
            active = active[~done]
            k += 1
        out[idx] = pre1 * s1 + pre2 * s2
    return out


def _gauss_sum(a, b, c) -> np.ndarray:
    """``F(a, b; c; 1) = Gamma(c) Gamma(c-a-b) / (Gamma(c-a) Gamma(c-b))``."""
    s = c - a - b
    sign = sp.gammasgn(c) * sp.gammasgn(s) * sp.gammasgn(c - a) * sp.gammasgn(c - b)
    return sign * np.exp(sp.gammaln(c) + sp.gammaln(s) - sp.gammaln(c - a) - sp.gammaln(c - b))


def gauss_2f1(a, b, c, z) -> np.ndarray | float:
    """Gauss hypergeometric function ``F(a, b; c; z)`` for real ``z`` in ``[-1, 1]``.

    The series is summed until three consecutive terms are below ``1e-16``
    times the partial sum, or exactly to its last term when ``a`` or ``b``
    is a nonpositive integer.  At ``z = 1`` the Gauss summation formula is
    used.  When ``c - a - b`` is a positive integer and ``z`` is close to 1
    relative to ``1 / max(|a|, |b|)``, the logarithmic expansion in ``1 - z``
    replaces the slowly converging series.  For ``z < -1/2`` the alternating
    series cancels heavily, so the Pfaff transformation maps the argument to
    ``z / (z - 1)`` in ``[1/3, 1/2]`` first.

    Parameters
    ----------
    a, b, c, z : array_like
        Broadcast together.

    Returns
    -------
    float or numpy.ndarray

    Raises
    ------
    DomainError
        If ``|z| > 1`` or the series diverges at ``|z| = 1``.
    """
    a, b, c, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c, z)))
    shape = z.shape
    a, b, c, z = (v.ravel() for v in (a, b, c, z))
    if np.any(np.abs(z) > 1.0):
        raise DomainError("gauss_2f1 requires |z| <= 1")
    out = np.empty_like(z)
    terminating = _is_nonpos_int(a) | _is_nonpos_int(b)
    s = c - a - b
    at_one = (z == 1.0) & ~terminating
    if np.any(at_one & (s <= 0)):
        raise DomainError("series diverges at z = 1 when c - a - b <= 0")
    if np.any((z == -1.0) & ~terminating & (s <= -1)):
        raise DomainError("series diverges at z = -1 when c - a - b <= -1")
    if np.any(at_one):
        out[at_one] = _gauss_sum(a[at_one], b[at_one], c[at_one])
    span = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0) * (1.0 - z)
    log_case = (
        ~terminating
        & ~at_one
        & (z >= 0.5)
        & (s > 0.5)
        & (np.abs(s - np.rint(s)) < 1e-12)
        & (span <= LOG_CASE_SPAN)
    )
    if np.any(log_case):
        out[log_case] = _log_continuation(a[log_case], b[log_case], c[log_case], z[log_case])
    pfaff = z < -0.5
    if np.any(pfaff):
        # keep a nonpositive integer parameter in place so the series still terminates
        swap = _is_nonpos_int(a[pfaff]) & ~_is_nonpos_int(b[pfaff])
        p, q, cp, zp = a[pfaff], b[pfaff], c[pfaff], z[pfaff]
        keep = np.where(swap, p, q)
        other = np.where(swap, q, p)
        out[pfaff] = (1.0 - zp) ** (-keep) * _direct_series(cp - other, keep, cp, zp / (zp - 1.0))
    rest = ~at_one & ~log_case & ~pfaff
    if np.any(rest):
        out[rest] = _direct_series(a[rest], b[rest], c[rest], z[rest])
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def _check_dim(n: int) -> None:
    if int(n) != n or n < 2:
        raise InputError(f"dimension must be an integer >= 2, got {n}")


def _check_radius(r: np.ndarray) -> None:
    if np.any((r < 0) | (r > 1)) or not np.all(np.isfinite(r)):
        raise InputError("radius must lie in [0, 1]")


@lru_cache(maxsize=64)
def _normalizers(n: int, M: int) -> np.ndarray:
    m = np.arange(M + 1, dtype=float)
    if n == 2:
        out = np.ones(M + 1)
    else:
        # Consecutive Gauss sums differ by the factor (m + d) / (m + n - 1).
        d = n / 2.0
        out = np.ones(M + 1)
        out[1:] = np.cumprod((m[:-1] + d) / (m[:-1] + n - 1))
    out.setflags(write=False)
    return out


def s_normalizers(n: int, M: int) -> np.ndarray:
    """Values ``F(m, 1 - n/2; m + n/2; 1)`` for ``m = 0..M`` (cached, read-only)."""
    _check_dim(n)
    return _normalizers(int(n), int(M))


def _family_table(b: float, d: float, M: int, z: np.ndarray) -> np.ndarray:
    """Rows ``F(m, b; m + d; z)`` for ``m = 0..M`` at each ``z`` (shape ``(M+1, K)``).

    For nonpositive integer ``b`` the terminating series is summed directly.
    Otherwise the recurrence

        f_{m-1} = (1 - B_m z) f_m - A_m z f_{m+1},
        A_m = m (m + d - b) / ((m + d)(m + d - 1)),  B_m = (b - m) / (m + d - 1),

    is run from accurate seeds at ``m = M, M + 1`` down to ``m = 0``, and the
    result is rescaled so that ``f_0 = 1`` exactly.
    """
    z = np.asarray(z, dtype=float)
    m = np.arange(M + 1, dtype=float)
    if b <= 0 and b == round(b):
        return np.asarray(gauss_2f1(m[:, None], b, m[:, None] + d, z[None, :]))
    out = np.empty((M + 1, z.size))
    # Close to z = 1 the two recurrence solutions nearly coincide and seed
    # errors drift; there every degree is cheap to evaluate directly.
    near = (M + 1) * (1.0 - z) <= LOG_CASE_SPAN
    if np.any(near):
        out[:, near] = gauss_2f1(m[:, None], b, m[:, None] + d, z[near][None, :])
    far = np.nonzero(~near)[0]
    if far.size:
        zf = z[far]
        f_next = np.asarray(gauss_2f1(M + 1.0, b, M + 1.0 + d, zf))
        f_cur = np.asarray(gauss_2f1(float(M), b, M + d, zf))
        rows = np.empty((M + 1, far.size))
        rows[M] = f_cur
        for k in range(M, 0, -1):
            A = k * (k + d - b) / ((k + d) * (k + d - 1))
            B = (b - k) / (k + d - 1)
            f_prev = (1.0 - B * zf) * f_cur - A * zf * f_next
            rows[k - 1] = f_prev
            f_next, f_cur = f_cur, f_prev
        out[:, far] = rows / rows[0]
    return out


def s_table(n: int, M: int, r) -> np.ndarray:
    """Radial factors ``S_m(r)`` for ``m = 0..M``.

    Parameters
    ----------
    n : int
        Dimension.
    M : int
        Largest degree.
    r : array_like, shape (K,)
        Radii in ``[0, 1]``.

    Returns
    -------
    numpy.ndarray, shape (M + 1, K)
    """
    _check_dim(n)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    _check_radius(r)
    if n == 2:
        return np.ones((M + 1, r.size))
    d = n / 2.0
    out = _family_table(1.0 - d, d, M, r * r) / _normalizers(n, M)[:, None]
    out[:, r == 1.0] = 1.0
    return out


def s_derivative_table(n: int, M: int, r) -> np.ndarray:
    """Derivatives ``dS_m/dr`` for ``m = 0..M`` (shape ``(M + 1, K)``).

    Uses ``dF/dz = (a b / c) F(a + 1, b + 1; c + 1; z)`` with ``z = r^2``.
    """
    _check_dim(n)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    _check_radius(r)
    out = np.zeros((M + 1, r.size))
    if n == 2 or M == 0:
        return out
    d = n / 2.0
    b = 1.0 - d
    m = np.arange(1, M + 1, dtype=float)
    shifted = _family_table(b + 1.0, d, M + 1, r * r)[2:M + 2]
    scale = m * b / (m + d) / _normalizers(n, M)[1:]
    out[1:] = 2.0 * r[None, :] * scale[:, None] * shifted
    return out


def s_factor(n: int, m: int, r) -> np.ndarray | float:
    """Radial factor ``S_m(r)`` by direct series summation.

    ``S_0 = 1`` and ``S_m(1) = 1`` exactly; in dimension 2 every ``S_m`` is 1.
    """
    _check_dim(n)
    if m < 0 or int(m) != m:
        raise InputError("degree must be a nonnegative integer")
    r_arr = np.asarray(r, dtype=float)
    _check_radius(r_arr)
    if n == 2 or m == 0:
        out = np.ones_like(r_arr)
    else:
        d = n / 2.0
        num = np.asarray(gauss_2f1(m, 1.0 - d, m + d, r_arr * r_arr))
        den = gauss_2f1(m, 1.0 - d, m + d, 1.0)
        out = np.where(r_arr == 1.0, 1.0, num / den)
    return float(out) if out.ndim == 0 else out


def s_factor_derivative(n: int, m: int, r) -> np.ndarray | float:
    """``dS_m/dr`` from the shifted-parameter derivative identity."""
    _check_dim(n)
    if m < 0 or int(m) != m:
        raise InputError("degree must be a nonnegative integer")
    r_arr = np.asarray(r, dtype=float)
    _check_radius(r_arr)
    if n == 2 or m == 0:
        out = np.zeros_like(r_arr)
    else:
        d = n / 2.0
        b = 1.0 - d
        den = gauss_2f1(m, b, m + d, 1.0)
        out = 2.0 * r_arr * (m * b / (m + d)) * np.asarray(gauss_2f1(m + 1, b + 1, m + d + 1, r_arr * r_arr)) / den
    return float(out) if out.ndim == 0 else out


def dim_hm(n: int, m: int) -> int:
    """Dimension of the space of degree-``m`` harmonic polynomials on ``R^n``."""
    _check_dim(n)
    if m < 0:
        raise InputError("degree must be nonnegative")
    lower = math.comb(m + n - 3, n - 1) if m >= 2 else 0
    return math.comb(m + n - 1, n - 1) - lower


def iter_zonal(n: int, x, y, M: int, *, grad: bool = False) -> Iterator[tuple]:
    """Yield ``(m, Z_m(x, y))`` or ``(m, Z_m, grad_x Z_m)`` for ``m = 0..M``.

    The zonal harmonic is evaluated in homogeneous form: with ``u = <x, y>``
    and ``v = |x|^2 |y|^2`` the Gegenbauer recurrence

        (k + 1) P_{k+1} = 2 (k + lam) u P_k - (k + 2 lam - 1) v P_{k-1},

    ``lam = (n - 2) / 2``, gives ``P_k = (|x||y|)^k C_k^lam(cos angle)`` and
    ``Z_m = (2m + n - 2) / (n - 2) P_m``.  Dimension 2 uses the Chebyshev
    recurrence with ``Z_m = 2 T_m`` for ``m >= 1``.  Gradients in ``x`` follow
    by differentiating the recurrence with ``grad u = y`` and
    ``grad v = 2 |y|^2 x``.

    Parameters
    ----------
    x, y : array_like, shape (..., n)
        Broadcast against each other.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    u = np.einsum("...i,...i->...", x, y)
    yy = np.einsum("...i,...i->...", y, y)
    v = np.einsum("...i,...i->...", x, x) * yy
    lam = (n - 2) / 2.0
    p_prev = np.ones_like(u)
    p_cur = u if n == 2 else 2.0 * lam * u
    g_prev = g_cur = None
    if grad:
        du = y
        dv = 2.0 * yy[..., None] * x
        g_prev = np.zeros_like(x)
        g_cur = du if n == 2 else 2.0 * lam * du

    def scaled(m, p, g):
        if n == 2:
            f = 1.0 if m == 0 else 2.0
        else:
            f = (2 * m + n - 2) / (n - 2)
        return (m, f * p, f * g) if grad else (m, f * p)

    yield scaled(0, p_prev, g_prev)
    if M >= 1:
        yield scaled(1, p_cur, g_cur)
    for k in range(1, M):
        if n == 2:
            p_next = 2.0 * u * p_cur - v * p_prev
            if grad:
                g_next = (2.0 * du * p_cur[..., None] + 2.0 * u[..., None] * g_cur
                          - dv * p_prev[..., None] - v[..., None] * g_prev)
        else:
            c1 = 2.0 * (k + lam) / (k + 1)
            c2 = (k + 2 * lam - 1) / (k + 1)
            p_next = c1 * u * p_cur - c2 * v * p_prev
            if grad:
                g_next = (c1 * (du * p_cur[..., None] + u[..., None] * g_cur)
                          - c2 * (dv * p_prev[..., None] + v[..., None] * g_prev))
        p_prev, p_cur = p_cur, p_next
        if grad:
            g_prev, g_cur = g_cur, g_next
        yield scaled(k + 1, p_cur, g_cur)


def zonal_table(n: int, M: int, x, y) -> np.ndarray:
    """Stack ``Z_m(x, y)`` for ``m = 0..M`` along a new leading axis."""
    _check_dim(n)
    return np.stack([z for _, z in iter_zonal(n, x, y, M)])


def zonal(n: int, m: int, x, y) -> np.ndarray | float:
    """Zonal harmonic ``Z_m(x, y)``, homogeneous of degree ``m`` in each argument."""
    _check_dim(n)
    if m < 0 or int(m) != m:
        raise InputError("degree must be a nonnegative integer")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != n or y.shape[-1] != n:
        raise InputError("point dimension does not match n")
    out = zonal_table(n, m, x, y)[m]
    return float(out) if out.ndim == 0 else out


def zonal_gradient(n: int, m: int, x, y) -> np.ndarray:
    """Gradient of ``Z_m(x, y)`` with respect to ``x``."""
    _check_dim(n)
    for k, _, g in iter_zonal(n, x, y, m, grad=True):
        if k == m:
            return g
    raise AssertionError("unreachable")
