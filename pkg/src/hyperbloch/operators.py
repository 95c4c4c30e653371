"""Hyperbolic-harmonic functions and the operators acting on them.

A :class:`ZonalExpansion` stores a finite series

    f(x) = sum_m S_m(|x|) q_m(x),    q_m(x) = sum_j w[j, m] Z_m(x, eta_j),

as a weight matrix over a fixed list of poles ``eta_j``.  Kernel slices,
Poisson terms and the operators ``D^t_s`` all stay inside this form, which
gives exact series-side oracles for the quadrature-side computations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, InputError
from .kernels import KernelTable, kernel_table
from .quadrature import BallRule, ball_rule, cm_coefficients, sphere_rule, truncated_radial_rule
from .specialfn import iter_zonal, s_derivative_table, s_table

#: Points per evaluation block (bounds temporary memory).
CHUNK = 4096


def _frozen(a) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ZonalExpansion:
    """Finite hyperbolic-harmonic series with zonal degree components.

    Parameters
    ----------
    n : int
        Dimension.
    poles : array_like, shape (J, n)
        Unit vectors ``eta_j``.
    weights : array_like, shape (J, M + 1)
        ``weights[j, m]`` multiplies ``S_m(|x|) Z_m(x, eta_j)``.
    """

    n: int
    poles: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        poles = np.atleast_2d(np.asarray(self.poles, dtype=float))
        weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        if poles.shape[1] != self.n:
            raise InputError("pole dimension does not match n")
        if weights.shape[0] != poles.shape[0]:
            raise InputError("need one weight row per pole")
        if not np.allclose(np.linalg.norm(poles, axis=1), 1.0, atol=1e-14, rtol=0):
            raise InputError("poles must be unit vectors")
        if not np.all(np.isfinite(weights)):
            raise InputError("weights must be finite")
        object.__setattr__(self, "poles", _frozen(poles))
        object.__setattr__(self, "weights", _frozen(weights))

    @property
    def degree(self) -> int:
        """Largest degree present in the representation."""
        return self.weights.shape[1] - 1

    # construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, n: int, value: float) -> "ZonalExpansion":
        e1 = np.eye(n)[0]
        return cls(n, e1[None, :], [[float(value)]])

    @classmethod
    def from_terms(cls, n: int, terms: Iterable[tuple[int, Sequence[tuple[float, Sequence[float]]]]]) -> "ZonalExpansion":
        """Build from ``[(m, [(w, eta), ...]), ...]``; poles are normalized and merged."""
        entries = [(int(m), float(w), np.asarray(eta, dtype=float)) for m, pairs in terms for w, eta in pairs]
        if not entries:
            return cls.constant(n, 0.0)
        poles: list[np.ndarray] = []
        index: list[int] = []
        for _, _, eta in entries:
            eta = eta / np.linalg.norm(eta)
            for j, p in enumerate(poles):
                if np.array_equal(p, eta):
                    index.append(j)
                    break
            else:
                poles.append(eta)
                index.append(len(poles) - 1)
        M = max(m for m, _, _ in entries)
        weights = np.zeros((len(poles), M + 1))
        for (m, w, _), j in zip(entries, index):
            weights[j, m] += w
        return cls(n, np.array(poles), weights)

    @classmethod
    def poisson(cls, zeta, M: int) -> "ZonalExpansion":
        """Partial sum ``sum_{m <= M} S_m(|x|) Z_m(x, zeta)`` of the Poisson kernel ``P_h(x, zeta)``."""
        zeta = np.asarray(zeta, dtype=float)
        return cls(zeta.size, zeta[None, :] / np.linalg.norm(zeta), np.ones((1, M + 1)))

    @classmethod
    def kernel_slice(cls, table: KernelTable, y, M: int | None = None, r_max: float = 0.999,
                     tol: float = 1e-12) -> "ZonalExpansion":
        """``R_alpha(., y)`` truncated so the tail is below ``tol`` on ``|x| <= r_max``."""
        y = np.asarray(y, dtype=float)
        ry = float(np.linalg.norm(y))
        if M is None:
            M = table.order_for(ry * r_max, tol)
        if ry == 0.0:
            return cls(table.n, np.eye(table.n)[:1], [[table.coefficients[0]]])
        m = np.arange(M + 1)
        w = table.coefficients[: M + 1] * s_table(table.n, M, [ry])[:, 0] * ry ** m
        return cls(table.n, (y / ry)[None, :], w[None, :])

    # algebra --------------------------------------------------------------

    def _padded(self, M: int) -> np.ndarray:
        return np.pad(self.weights, ((0, 0), (0, M - self.degree)))

    def __add__(self, other: "ZonalExpansion") -> "ZonalExpansion":
        if not isinstance(other, ZonalExpansion) or other.n != self.n:
            return NotImplemented
        M = max(self.degree, other.degree)
        return ZonalExpansion(self.n, np.vstack([self.poles, other.poles]),
                              np.vstack([self._padded(M), other._padded(M)]))

    def __neg__(self) -> "ZonalExpansion":
        return self.scale(-1.0)

    def __sub__(self, other: "ZonalExpansion") -> "ZonalExpansion":
        return self + (-other)

    def scale(self, factor: float) -> "ZonalExpansion":
        return ZonalExpansion(self.n, self.poles, factor * self.weights)

    def with_weights(self, weights) -> "ZonalExpansion":
        return ZonalExpansion(self.n, self.poles, weights)

    def degree_multiply(self, multipliers) -> "ZonalExpansion":
        """Scale the degree-``m`` component by ``multipliers[m]``."""
        mult = np.asarray(multipliers, dtype=float)[: self.degree + 1]
        return self.with_weights(self.weights * mult[None, :])

    # evaluation -----------------------------------------------------------

    def __call__(self, x) -> np.ndarray | float:
        return evaluate(self, x)


def _flatten_points(x, n: int) -> tuple[np.ndarray, tuple]:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise InputError("point dimension does not match the expansion")
    lead = x.shape[:-1]
    pts = x.reshape(-1, n)
    if np.any(np.einsum("ij,ij->i", pts, pts) >= 1.0):
        raise InputError("evaluation points must lie in the open unit ball")
    return pts, lead


def _radial(fn, n: int, M: int, r: np.ndarray) -> np.ndarray:
    uniq, inv = np.unique(r, return_inverse=True)
    return fn(n, M, uniq)[:, inv]


def evaluate(f: ZonalExpansion, x) -> np.ndarray | float:
    """Evaluate ``f`` at points ``x`` of shape ``(..., n)``."""
    pts, lead = _flatten_points(x, f.n)
    M = f.degree
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], CHUNK):
        p = pts[start:start + CHUNK]
        S = _radial(s_table, f.n, M, np.linalg.norm(p, axis=1))
        acc = np.zeros(p.shape[0])
        for m, z in iter_zonal(f.n, p[:, None, :], f.poles[None, :, :], M):
            acc += S[m] * (z @ f.weights[:, m])
        out[start:start + CHUNK] = acc
    out = out.reshape(lead)
    return float(out) if out.ndim == 0 else out


def gradient(f: ZonalExpansion, x) -> np.ndarray:
    """Euclidean gradient of ``f`` at points ``x`` (shape ``(..., n)``)."""
    pts, lead = _flatten_points(x, f.n)
    M = f.degree
    out = np.empty_like(pts)
    for start in range(0, pts.shape[0], CHUNK):
        p = pts[start:start + CHUNK]
        r = np.linalg.norm(p, axis=1)
        S = _radial(s_table, f.n, M, r)
        dS = _radial(s_derivative_table, f.n, M, r)
        xhat = p / np.where(r > 0, r, 1.0)[:, None]
        acc = np.zeros_like(p)
        for m, z, gz in iter_zonal(f.n, p[:, None, :], f.poles[None, :, :], M, grad=True):
            w = f.weights[:, m]
            acc += dS[m][:, None] * xhat * (z @ w)[:, None] + S[m][:, None] * np.einsum("pjk,j->pk", gz, w)
        out[start:start + CHUNK] = acc
    return out.reshape(lead + (f.n,))


def dts_multipliers(n: int, s: float, t: float, M: int) -> np.ndarray:
    """Degree multipliers ``c_m(s + t) / c_m(s)`` of ``D^t_s`` for ``m = 0..M``."""
    if not s > -1 or not s + t > -1:
        raise InputError("D^t_s needs s > -1 and s + t > -1")
    if t == 0:
        return np.ones(M + 1)
    return cm_coefficients(n, s + t, M) / cm_coefficients(n, s, M)


def dts_series(f: ZonalExpansion, s: float, t: float) -> ZonalExpansion:
    """Apply ``D^t_s`` on the series side (exact on the representation)."""
    if t == 0:
        return f
    return f.degree_multiply(dts_multipliers(f.n, s, t, f.degree))


@dataclass(frozen=True)
class SampledFunction:
    """Function values at the nodes of a :class:`BallRule`."""

    rule: BallRule
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.rule.shape:
            raise InputError(f"expected values of shape {self.rule.shape}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InputError("sampled values must be finite")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def from_function(cls, rule: BallRule, fn: Callable[[np.ndarray], np.ndarray]) -> "SampledFunction":
        """Sample ``fn`` (mapping ``(..., n)`` points to values) on the rule nodes."""
        return cls(rule, np.asarray(fn(rule.points()), dtype=float).reshape(rule.shape))


def _kernel_integral(values: np.ndarray, rule: BallRule, table: KernelTable, x, tol: float) -> np.ndarray:
    """``int R(x, y) phi(y) d mu(y)`` where ``mu`` is the rule's measure.

    With ``H[m, j] = sum_i W_i S_m(r_i) r_i^m phi(r_i zeta_j)`` precomputed,
    each evaluation point costs one zonal sweep over the sphere nodes.
    """
    pts, lead = _flatten_points(x, rule.n)
    r_nodes = rule.radial.nodes
    rx = np.linalg.norm(pts, axis=1)
    M = table.order_for(float(rx.max(initial=0.0)) * float(r_nodes.max()), tol)
    coef = table.coefficients[: M + 1]
    m = np.arange(M + 1)
    radial = s_table(rule.n, M, r_nodes) * r_nodes[None, :] ** m[:, None] * rule.radial.weights[None, :]
    H = (radial @ values) * rule.sphere.weights[None, :]
    Sx = _radial(s_table, rule.n, M, rx)
    out = np.zeros(pts.shape[0])
    for start in range(0, pts.shape[0], CHUNK // 4):
        sl = slice(start, start + CHUNK // 4)
        p = pts[sl]
        acc = np.zeros(p.shape[0])
        for k, z in iter_zonal(rule.n, p[:, None, :], rule.sphere.nodes[None, :, :], M):
            acc += coef[k] * Sx[k, sl] * (z @ H[k])
        out[sl] = acc
    out = out.reshape(lead)
    return float(out) if out.ndim == 0 else out


def bergman_project(phi: SampledFunction, alpha: float, eval_at, tol: float = 1e-11,
                    table: KernelTable | None = None) -> np.ndarray | float:
    """Bergman projection ``P_alpha phi(x) = int R_alpha(x, y) phi(y) d nu_alpha(y)``.

    The sphere rule must be exact to at least the kernel truncation order
    plus the angular degree of ``phi``; otherwise high-degree terms alias.
    """
    if phi.rule.alpha != alpha:
        raise ConfigurationError(f"phi is sampled on a rule for alpha={phi.rule.alpha}, not {alpha}")
    table = table or kernel_table(phi.rule.n, alpha)
    return _kernel_integral(phi.values, phi.rule, table, eval_at, tol)


def dts_integral(f, s: float, t: float, eval_at, rule: BallRule | None = None, tol: float = 1e-11,
                 M_max: int = 400) -> np.ndarray | float:
    """``D^t_s f(x) = int R_{s+t}(x, y) f(y) d nu_s(y)`` by quadrature.

    ``f`` is a :class:`SampledFunction` on a rule for ``nu_s`` or a
    :class:`ZonalExpansion`, which is then sampled on ``rule`` (default: 128
    radial nodes, sphere degree 64).
    """
    if not s > -1 or not s + t > -1:
        raise InputError("D^t_s needs s > -1 and s + t > -1")
    if isinstance(f, ZonalExpansion):
        rule = rule or ball_rule(f.n, s)
        f = SampledFunction.from_function(rule, f)
    if f.rule.alpha != s:
        raise ConfigurationError(f"f is sampled for alpha={f.rule.alpha}, not s={s}")
    return _kernel_integral(f.values, f.rule, kernel_table(f.rule.n, s + t, M_max), eval_at, tol)


def bergman_poly_constant(n: int, alpha: float, j: int, k: int, count: int = 128) -> float:
    """Constant ``C`` with ``P_alpha(|y|^k q_j) = C S_j q_j``.

    ``C = c_j(alpha) int_0^1 n r^(n-1) S_j(r) r^(k+2j) (1 - r^2)^alpha dr``,
    evaluated with the radial Gauss-Jacobi rule.
    """
    from .quadrature import radial_rule

    rule = radial_rule(n, alpha, count)
    S = s_table(n, j, rule.nodes)[j]
    return float(cm_coefficients(n, alpha, j)[j] * np.sum(rule.weights * S * rule.nodes ** (k + 2 * j)))


@dataclass(frozen=True)
class BlochGrid:
    """Radial-times-spherical grid for sup-norm estimates.

    Radii are ``linear`` equispaced values on ``[0, min(0.9, r_max)]`` together with
    ``1 - 2^(-k / per_octave)`` up to ``r_max``; directions are the nodes of a
    sphere rule of the given degree plus ``+-`` the poles of the function
    being measured.
    """

    per_octave: int = 4
    linear: int = 16
    sphere_degree: int = 16
    r_max: float = 0.999

    def radii(self) -> np.ndarray:
        k_max = int(np.floor(-self.per_octave * np.log2(1.0 - self.r_max) + 1e-9))
        log_part = 1.0 - 2.0 ** (-np.arange(1, k_max + 1) / self.per_octave)
        linear = np.linspace(0.0, min(0.9, self.r_max), self.linear)
        return np.unique(np.concatenate([linear, log_part[log_part <= self.r_max], [self.r_max]]))

    def directions(self, n: int, poles=None) -> np.ndarray:
        dirs = sphere_rule(n, self.sphere_degree).nodes
        if poles is not None and len(poles):
            poles = np.asarray(poles, dtype=float)
            dirs = np.vstack([dirs, poles, -poles])
        return dirs

    def points(self, n: int, poles=None) -> np.ndarray:
        """All grid points, shape ``(radii * directions, n)``."""
        r = self.radii()
        d = self.directions(n, poles)
        return (r[:, None, None] * d[None, :, :]).reshape(-1, n)

    def refined(self) -> "BlochGrid":
        """Grid with twice the radial density and twice the sphere degree."""
        return BlochGrid(2 * self.per_octave, 2 * self.linear, 2 * self.sphere_degree, self.r_max)

    def describe(self) -> dict:
        return {"per_octave": self.per_octave, "linear": self.linear,
                "sphere_degree": self.sphere_degree, "r_max": self.r_max}


@dataclass(frozen=True)
class BlochNormReport:
    """Grid estimates of Bloch-type norms of one function."""

    f0: float
    seminorm: float
    norm: float
    sup_abs: float
    weighted_sups: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)


def bloch_norms(f: ZonalExpansion, configs: Sequence[tuple[float, float]] = (), grid: BlochGrid | None = None) -> BlochNormReport:
    """Estimate ``p_B(f) = sup (1 - |x|^2)|grad f|`` and related sups on a grid.

    Parameters
    ----------
    f : ZonalExpansion
    configs : sequence of (alpha, t)
        For each pair the estimate ``sup (1 - |x|^2)^t |D^t_alpha f(x)|`` is
        reported under the key ``(alpha, t)``.
    grid : BlochGrid, optional
        Defaults to ``BlochGrid()``.

    Returns
    -------
    BlochNormReport
        ``norm`` is ``|f(0)| + p_B``; ``sup_abs`` is the grid sup of ``|f|``.
    """
    grid = grid or BlochGrid()
    pts = grid.points(f.n, f.poles)
    w = 1.0 - np.einsum("ij,ij->i", pts, pts)
    f0 = evaluate(f, np.zeros(f.n))
    semi = float(np.max(w * np.linalg.norm(gradient(f, pts), axis=1)))
    sup_abs = float(np.max(np.abs(evaluate(f, pts))))
    sups = {}
    for alpha, t in configs:
        g = dts_series(f, alpha, t)
        sups[(float(alpha), float(t))] = float(np.max(w ** t * np.abs(evaluate(g, pts))))
    return BlochNormReport(f0, semi, abs(f0) + semi, sup_abs, sups, grid.describe())


def pairing(f, g: ZonalExpansion, alpha: float, t: float, rule: BallRule | None = None) -> float:
    """Absolutely convergent pairing ``int f (1 - |x|^2)^t D^t_alpha g d nu_alpha``.

    The weight ``(1 - |x|^2)^t`` is folded into the measure, so the default
    rule is a ball rule for ``nu_{alpha + t}``.  A :class:`SampledFunction`
    ``f`` may be sampled on a rule for ``nu_{alpha + t}`` or for ``nu_alpha``;
    in the second case the weight is applied explicitly.
    """
    if not alpha > -1 or not t > 0:
        raise InputError("pairing needs alpha > -1 and t > 0")
    if isinstance(f, SampledFunction):
        rule = f.rule
        values = f.values
        if rule.alpha == alpha:
            r = rule.radial.nodes
            values = values * ((1.0 - r * r) ** t)[:, None]
        elif rule.alpha != alpha + t:
            raise ConfigurationError("f must be sampled for nu_alpha or nu_(alpha+t)")
    else:
        rule = rule or ball_rule(g.n, alpha + t)
        values = np.asarray(evaluate(f, rule.points())).reshape(rule.shape) if isinstance(f, ZonalExpansion) \
            else np.asarray(f(rule.points()), dtype=float).reshape(rule.shape)
    dg = np.asarray(evaluate(dts_series(g, alpha, t), rule.points())).reshape(rule.shape)
    return float(np.sum(rule.weights() * values * dg))


def truncated_pairing(f, g, alpha: float, radius: float, radial_nodes: int = 128,
                      sphere_degree: int = 64) -> float:
    """``int_{radius B} f g d nu_alpha`` (the pairing before the limit ``radius -> 1``)."""
    n = g.n if isinstance(g, ZonalExpansion) else f.n
    rule = BallRule(truncated_radial_rule(n, alpha, radius, radial_nodes), sphere_rule(n, sphere_degree))
    pts = rule.points()
    fv = np.asarray(f(pts)).reshape(rule.shape)
    gv = np.asarray(g(pts)).reshape(rule.shape)
    return float(np.sum(rule.weights() * fv * gv))


def unbounded_bloch_example(n: int, M: int) -> ZonalExpansion:
    """Truncation of ``sum_m (c_m(0) / c_m(n-1)) S_m(|x|) Z_m(x, e_1)``.

    This is ``D^{-(n-1)}_{n-1}`` applied to the Poisson kernel at ``e_1``; the
    full series is a Bloch function that is unbounded along the ray to
    ``e_1``.
    """
    e1 = np.eye(n)[0]
    return dts_series(ZonalExpansion.poisson(e1, M), n - 1.0, -(n - 1.0))
