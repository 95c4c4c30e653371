"""Verification suites: batteries of numerical checks, one per module or result.

Each suite returns a :class:`~hyperbloch.report.Report` whose check records
name the identity they exercise through an anchor label.  All randomness is
drawn from generators seeded by :class:`SuiteConfig`, and no timing or other
run-dependent value enters a check record, so a suite run twice with the same
configuration gives the same report apart from its timestamp.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Callable

import numpy as np
from scipy import special as sp

from .atomic import MODES, AtomicConfig, AtomicSystem, certified_radius, default_test_set
from .errors import ConvergenceError, InputError, RefusalError
from .geometry import bracket, mobius, mobius_jacobian_det, pseudo_ball, rho
from .kernels import kernel_eval, kernel_gradient, kernel_table, poisson_eval, poisson_series
from .lattice import Partition, _rho_pairs, build_lattice
from .operators import (
    BlochGrid,
    SampledFunction,
    ZonalExpansion,
    bergman_poly_constant,
    bergman_project,
    bloch_norms,
    dts_integral,
    dts_series,
    evaluate,
    pairing,
    unbounded_bloch_example,
)
from .quadrature import ball_rule, c0_closed_form, cm_coefficients, integrate_ball, integrate_sphere, sphere_rule
from .report import CheckRecord, Report
from .specialfn import dim_hm, s_factor, s_table, zonal

SUITES = ("geometry", "specialfn", "quadrature", "kernels", "projection", "duality-pairing",
          "unbounded-bloch", "odd-dim-witness", "lattice", "atomic")

GRIDS = {
    "coarse": BlochGrid(per_octave=2, linear=8, sphere_degree=8),
    "default": BlochGrid(),
    "fine": BlochGrid().refined(),
}


@dataclass(frozen=True)
class SuiteConfig:
    """Parameters shared by all suites.

    Parameters
    ----------
    n : int
        Dimension.
    alpha, t : float
        Weight and derivative order used by the operator suites.
    seed : int
        Seed of every random stream.
    samples : int
        Random instances for identity checks.
    grid : {"coarse", "default", "fine"}
        Bloch-norm grid.
    r, r_max : float
        Lattice separation and truncation radius for the lattice and atomic suites.
    tol : dict
        Threshold overrides keyed by check name.
    """

    n: int = 3
    alpha: float = 0.0
    t: float = 1.0
    seed: int = 0
    samples: int = 10_000
    grid: str = "default"
    r: float = 0.2
    r_max: float = 0.85
    tol: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InputError("n must be an integer >= 2")
        if self.grid not in GRIDS:
            raise InputError(f"grid must be one of {sorted(GRIDS)}")
        if self.samples < 1:
            raise InputError("samples must be positive")
        if any(not v > 0 for v in self.tol.values()):
            raise InputError("tolerance overrides must be positive")

    def as_dict(self) -> dict:
        return asdict(self)


class _Checks:
    """Collects check records, applying threshold overrides."""

    def __init__(self, cfg: SuiteConfig):
        self.cfg = cfg
        self.records: list[CheckRecord] = []

    def below(self, name: str, anchor: str, value, threshold: float, note: str = "") -> CheckRecord:
        threshold = self.cfg.tol.get(name, threshold)
        ok = bool(np.all(np.isfinite(value)) and np.all(np.asarray(value) < threshold))
        return self._add(CheckRecord(name, anchor, value, threshold, ok, note))

    def above(self, name: str, anchor: str, value, threshold: float, note: str = "") -> CheckRecord:
        threshold = self.cfg.tol.get(name, threshold)
        ok = bool(np.all(np.isfinite(value)) and np.all(np.asarray(value) > threshold))
        return self._add(CheckRecord(name, anchor, value, threshold, ok, note))

    def truth(self, name: str, anchor: str, value, ok: bool, note: str = "") -> CheckRecord:
        return self._add(CheckRecord(name, anchor, value, "true", bool(ok), note))

    def _add(self, record: CheckRecord) -> CheckRecord:
        self.records.append(record)
        return record


def _ball_points(rng: np.random.Generator, count: int, n: int, radius: float) -> np.ndarray:
    g = rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1)[:, None]
    return g * radius * rng.random(count)[:, None] ** (1.0 / n)


def _unit(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


# finite-difference hyperbolic Laplacian ---------------------------------------------------


def hyperbolic_laplacian(f: Callable[[np.ndarray], np.ndarray], x, h: float = 5e-3) -> float:
    """``(1-|x|^2)^2 Lap f + 2(n-2)(1-|x|^2) <x, grad f>`` by fourth-order central differences.

    Raises
    ------
    InputError
        If the stencil leaves the ball (``|x| + 2h >= 1``).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    nx = float(np.linalg.norm(x))
    if not h > 0 or nx + 2 * h >= 1.0:
        raise InputError("the difference stencil must stay inside the ball")
    eye = np.eye(n)
    stencil = np.concatenate([x[None, :], x + h * eye, x - h * eye, x + 2 * h * eye, x - 2 * h * eye])
    vals = np.asarray(f(stencil), dtype=float).reshape(-1)
    f0 = vals[0]
    fp, fm, fpp, fmm = (vals[1 + k * n:1 + (k + 1) * n] for k in range(4))
    lap = float(np.sum(-fpp + 16.0 * fp - 30.0 * f0 + 16.0 * fm - fmm)) / (12.0 * h * h)
    grad = (-fpp + 8.0 * fp - 8.0 * fm + fmm) / (12.0 * h)
    w = 1.0 - nx * nx
    return w * w * lap + 2.0 * (n - 2) * w * float(grad @ x)


def hyperbolic_laplacian_residual(f: Callable[[np.ndarray], np.ndarray], x, h: float = 5e-3) -> float:
    """``|Delta_h f(x)|`` by central differences (zero for hyperbolic-harmonic ``f`` up to O(h^4))."""
    return abs(hyperbolic_laplacian(f, x, h))


# suites -----------------------------------------------------------------------------------


def suite_geometry(cfg: SuiteConfig) -> list[CheckRecord]:
    c = _Checks(cfg)
    rng = np.random.default_rng([cfg.seed, 1])
    n, N = cfg.n, cfg.samples
    a = _ball_points(rng, N, n, 0.95)
    x = _ball_points(rng, N, n, 0.95)
    phi = mobius(a, x)
    aa = np.einsum("ij,ij->i", a, a)
    xx = np.einsum("ij,ij->i", x, x)
    br = bracket(x, a)
    lhs = 1.0 - np.einsum("ij,ij->i", phi, phi)
    c.below("mobius_identity", "MobiusIdnt", float(np.max(np.abs(lhs - (1 - aa) * (1 - xx) / br ** 2))), 1e-12,
            f"{N} random pairs in the ball of radius 0.95")
    c.below("bracket_identity", "avarphia", float(np.max(np.abs(bracket(a, phi) - (1 - aa) / br))), 1e-12)
    c.below("involution", "definevarphia", float(np.max(np.abs(mobius(a, phi) - x))), 1e-12)
    ends = max(float(np.max(np.abs(mobius(a, np.zeros_like(a)) - a))), float(np.max(np.abs(mobius(a, a)))))
    c.below("exchanges_a_and_0", "definevarphia", ends, 1e-12)
    diff = np.linalg.norm(a - x, axis=1) / bracket(a, x)
    c.below("rho_formula", "phmetric", float(np.max(np.abs(np.linalg.norm(phi, axis=1) - diff))), 1e-12)

    # Jacobian determinant against central differences
    k = min(N, 1000)
    aj = _ball_points(rng, k, n, 0.9)
    xj = _ball_points(rng, k, n, 0.9)
    h = 1e-6
    cols = [(mobius(aj, xj + h * e) - mobius(aj, xj - h * e)) / (2 * h) for e in np.eye(n)]
    fd = np.abs(np.linalg.det(np.stack(cols, axis=-1)))
    exact = mobius_jacobian_det(aj, xj)
    c.below("jacobian_fd", "Jacob", float(np.max(np.abs(fd - exact) / exact)), 1e-6, f"{k} instances, step {h}")
    w = (1 - np.einsum("ij,ij->i", mobius(aj, xj), mobius(aj, xj))) / (1 - np.einsum("ij,ij->i", xj, xj))
    c.below("jacobian_formula", "Jacob", float(np.max(np.abs(w ** n - exact) / exact)), 1e-12)

    # pseudo-balls are Euclidean balls
    r = 0.3
    worst = 0.0
    for centre in a[:200]:
        ball = pseudo_ball(centre, r)
        u = rng.standard_normal((50, n))
        u /= np.linalg.norm(u, axis=1)[:, None]
        pts = ball.center + ball.radius * u
        worst = max(worst, float(np.max(np.abs(rho(np.broadcast_to(centre, pts.shape), pts) - r))))
    c.below("pseudo_ball_boundary", "Ercenter", worst, 1e-12, "rho on the Euclidean sphere equals r")

    # ratio lemma (i) on random pairs
    rr = rho(a, x)
    ratio = (1 - np.linalg.norm(a, axis=1)) / (1 - np.linalg.norm(x, axis=1))
    viol = int(np.sum((ratio < (1 - rr) / (1 + rr) * (1 - 1e-12)) | (ratio > (1 + rr) / (1 - rr) * (1 + 1e-12))))
    c.below("ratio_lemma_violations", "Lratiobracket", viol, 1)
    return c.records


def suite_specialfn(cfg: SuiteConfig) -> list[CheckRecord]:
    c = _Checks(cfg)
    rng = np.random.default_rng([cfg.seed, 2])
    n = cfg.n
    at_one = s_table(n, 100, [1.0])[:, 0]
    c.truth("s_at_one", "Smr", float(np.max(np.abs(at_one - 1.0))), bool(np.all(at_one == 1.0)),
            "S_m(1) == 1 exactly for m <= 100")
    r = np.linspace(0.0, 1.0, 101)
    c.below("n2_constant", "Smr", float(np.max(np.abs(s_table(2, 100, r) - 1.0))), 1e-14)
    m = np.arange(101)[:, None]
    closed = ((m + 2) - m * r[None, :] ** 2) / 2.0
    c.below("n4_closed_form", "Smr", float(np.max(np.abs(s_table(4, 100, r) - closed) / closed)), 1e-12)
    S = s_table(n, 200, r)
    mm = np.arange(1, 201, dtype=float)
    c.above("s_lower_bound", "Smbound", float(S.min()), 1.0 - 1e-12, "S_m(r) >= 1")
    c.truth("s_growth_constant", "Smbound", float(np.max(S[1:] / mm[:, None] ** (n / 2 - 1))), True,
            "max S_m(r) / m^(n/2-1) over m <= 200")

    rule = sphere_rule(n, 32)
    eta = np.array([_unit(rng, n) for _ in range(3)])
    worst_rep = worst_orth = worst_diag = 0.0
    for deg in range(0, 13):
        zeta = rule.nodes
        for e1 in eta:
            for e2 in eta:
                # reproducing property: int Z_m(e1, z) Z_m(z, e2) d sigma(z) = Z_m(e1, e2)
                val = integrate_sphere(lambda z: zonal(n, deg, e1, z) * zonal(n, deg, z, e2), rule)
                worst_rep = max(worst_rep, abs(val - float(zonal(n, deg, e1, e2))))
            for other in range(deg + 1, 13):
                val = integrate_sphere(lambda z: zonal(n, deg, eta[0], z) * zonal(n, other, z, e1), rule)
                worst_orth = max(worst_orth, abs(val))
        worst_diag = max(worst_diag, abs(float(zonal(n, deg, eta[0], eta[0])) - dim_hm(n, deg)) / dim_hm(n, deg))
        del zeta
    c.below("zonal_reproducing", "zonal", worst_rep, 1e-8, "degrees 0..12, sphere rule of degree 32")
    c.below("orthogonality", "orthog", worst_orth, 1e-10)
    c.below("zonal_diagonal", "Zmless", worst_diag, 1e-12, "Z_m(e, e) = dim H_m")

    worst_h = 0.0
    pole = _unit(rng, n)
    for deg in range(0, 6):
        f = ZonalExpansion.from_terms(n, [(deg, [(1.0, pole)])])
        for x in _ball_points(rng, 5, n, 0.8):
            worst_h = max(worst_h, hyperbolic_laplacian_residual(f, x) / max(1.0, abs(float(f(x)))))
    c.below("h_harmonic_terms", "solnd", worst_h, 1e-5, "fourth-order differences, h = 5e-3, |x| <= 0.8")
    return c.records


def suite_quadrature(cfg: SuiteConfig) -> list[CheckRecord]:
    c = _Checks(cfg)
    rng = np.random.default_rng([cfg.seed, 3])
    n = cfg.n
    rule = sphere_rule(n, 24)
    c.below("sphere_weights", "sigma", abs(float(rule.weights.sum()) - 1.0), 1e-14)
    worst = 0.0
    eta = _unit(rng, n)
    for deg in range(1, rule.exact_degree + 1):
        worst = max(worst, abs(integrate_sphere(lambda z: zonal(n, deg, z, eta), rule)))
    c.below("sphere_harmonics_vanish", "sigma", worst, 1e-12, "zonal harmonics of degree 1..24")
    br = ball_rule(n, 0.0, 64, 16)
    c.below("ball_volume", "nu", abs(integrate_ball(lambda p: np.ones(p.shape[:-1]), 0.0, br) - 1.0), 1e-12)
    for alpha in (cfg.alpha, 1.0):
        br = ball_rule(n, alpha, 64, 16)
        mass = integrate_ball(lambda p: np.ones(p.shape[:-1]), alpha, br)
        c.below(f"weighted_mass_alpha_{alpha:g}", "cm", abs(mass * c0_closed_form(n, alpha) - 1.0), 1e-12)
    # polar decomposition: integral of |x|^2 against nu_alpha in closed form
    alpha = cfg.alpha
    br = ball_rule(n, alpha, 64, 16)
    val = integrate_ball(lambda p: np.einsum("...i,...i->...", p, p), alpha, br)
    exact = 0.5 * n * sp.beta(0.5 * n + 1.0, alpha + 1.0)
    c.below("radial_moment", "cm", abs(val - exact) / exact, 1e-12)
    return c.records


def suite_kernels(cfg: SuiteConfig) -> list[CheckRecord]:
    c = _Checks(cfg)
    rng = np.random.default_rng([cfg.seed, 4])
    n, alpha = cfg.n, cfg.alpha
    worst = max(abs(cm_coefficients(n, a, 0)[0] / c0_closed_form(n, a) - 1.0) for a in (alpha, 0.0, 1.0, 2.5))
    c.below("c0_beta", "cm", worst, 1e-10)
    coef = cm_coefficients(n, 0.0, 200)
    ratio = coef[20:] / np.arange(20, 201)
    c.below("cm_bracket", "cmasym", float(ratio.max() / ratio.min()), 2.0, "c_m(0)/m over m in [20, 200]")
    x = _ball_points(rng, 1000, n, 0.9)
    zeta = rng.standard_normal((1000, n))
    zeta /= np.linalg.norm(zeta, axis=1)[:, None]
    closed = poisson_eval(x, zeta)
    c.below("poisson_series", "Poisson", float(np.max(np.abs(poisson_series(x, zeta, 1e-10) - closed) / closed)), 1e-8,
            "1000 points with |x| <= 0.9")
    table = kernel_table(n, alpha)
    x = _ball_points(rng, 20, n, 0.7)
    y = _ball_points(rng, 20, n, 0.7)
    c.below("kernel_symmetry", "KernelExp", float(np.max(np.abs(kernel_eval(table, x, y) - kernel_eval(table, y, x)))), 1e-15)
    g = kernel_gradient(table, x, y)
    h = 1e-6
    fd = np.stack([(kernel_eval(table, x + h * e, y) - kernel_eval(table, x - h * e, y)) / (2 * h) for e in np.eye(n)], axis=-1)
    c.below("kernel_gradient_fd", "KernelExp", float(np.max(np.abs(g - fd)) / np.max(np.abs(fd))), 1e-7)
    worst_h = 0.0
    for yi in y[:4]:
        f = ZonalExpansion.kernel_slice(table, yi, r_max=0.8)
        for xi in x[:4] * (0.8 / 0.7):
            worst_h = max(worst_h, hyperbolic_laplacian_residual(f, xi) / max(1.0, abs(float(f(xi)))))
    c.below("kernel_h_harmonic", "KernelExp", worst_h, 1e-5)
    zeta0 = _unit(rng, n)
    lap = hyperbolic_laplacian_residual(lambda p: poisson_eval(p, zeta0), 0.3 * np.eye(n)[0])
    c.below("poisson_h_harmonic", "Poisson", lap, 1e-5, "x = 0.3 e_1")
    return c.records


def _operator_test_set(n: int, alpha: float, rng: np.random.Generator) -> list[ZonalExpansion]:
    table = kernel_table(n, alpha)
    return [ZonalExpansion.kernel_slice(table, _ball_points(rng, 1, n, 0.6)[0]),
            ZonalExpansion.poisson(_unit(rng, n), 30).scale(0.1),
            ZonalExpansion.from_terms(n, [(2, [(1.0, _unit(rng, n))]), (3, [(0.5, _unit(rng, n))])])]


def suite_projection(cfg: SuiteConfig) -> list[CheckRecord]:
    c = _Checks(cfg)
    rng = np.random.default_rng([cfg.seed, 5])
    n = cfg.n
    X = _ball_points(rng, 10, n, 0.7)
    worst = 0.0
    for alpha in sorted({cfg.alpha, 0.0, 1.0}):
        rule = ball_rule(n, alpha, 128, 96)
        for f in _operator_test_set(n, alpha, rng):
            fx = f(X)
            P = bergman_project(SampledFunction.from_function(rule, f), alpha, X)
            worst = max(worst, float(np.max(np.abs(P - fx) / (1.0 + np.abs(fx)))))
    c.below("reproducing_property", "KernelExp", worst, 1e-6, "kernel slices and Poisson terms, |x| <= 0.7")

    s, t = cfg.alpha, cfg.t
    rule = ball_rule(n, s, 128, 96)
    worst_int = worst_inv = 0.0
    for f in _operator_test_set(n, s, rng):
        D = dts_series(f, s, t)
        worst_int = max(worst_int, float(np.max(np.abs(dts_integral(f, s, t, X, rule=rule) - D(X)))))
        back = dts_series(D, s + t, -t)
        worst_inv = max(worst_inv, float(np.max(np.abs(back.weights - f.weights)) / np.max(np.abs(f.weights))))
    c.below("dts_integral_vs_series", "LDstInt", worst_int, 1e-6)
    c.below("dts_inverse", "DstInverse", worst_inv, 1e-12)
    y = _ball_points(rng, 1, n, 0.6)[0]
    lhs = dts_series(ZonalExpansion.kernel_slice(kernel_table(n, s), y), s, t)(X)
    rhs = kernel_eval(kernel_table(n, s + t), X, y)
    c.below("dts_kernel", "DstRs", float(np.max(np.abs(lhs - rhs) / (1 + np.abs(rhs)))), 1e-6)

    worst = {}
    for s_, t_ in ((0.0, 1.0), (1.0, 0.5)):
        r_ = ball_rule(n, s_, 128, 96)
        err = 0.0
        for f in _operator_test_set(n, s_, rng):
            D = dts_series(f, s_, t_)
            phi = SampledFunction.from_function(r_, lambda p, D=D, t_=t_: (1 - np.einsum("...i,...i->...", p, p)) ** t_ * D(p))
            err = max(err, float(np.max(np.abs(bergman_project(phi, s_, X) - f(X)))))
        worst[f"{s_:g},{t_:g}"] = err
    c.below("projection_onto", "PsIst", max(worst.values()), 1e-5, f"per (s,t): {worst}")

    alpha = cfg.alpha
    rule = ball_rule(n, alpha, 128, 64)
    eta = _unit(rng, n)
    worst = 0.0
    for j in range(0, 5):
        for k in range(0, 5):
            phi = SampledFunction.from_function(
                rule, lambda p, j=j, k=k: np.linalg.norm(p, axis=-1) ** k * zonal(n, j, p, eta))
            C = bergman_poly_constant(n, alpha, j, k)
            expected = C * s_factor(n, j, np.linalg.norm(X, axis=1)) * zonal(n, j, X, eta)
            worst = max(worst, float(np.max(np.abs(bergman_project(phi, alpha, X) - expected))))
    c.below("monomial_projection", "LBergmanpoly", worst, 1e-6, "P(|y|^k q_j) = C S_j q_j, j, k <= 4")
    return c.records


def suite_duality(cfg: SuiteConfig) -> list[CheckRecord]:
    c = _Checks(cfg)
    rng = np.random.default_rng([cfg.seed, 6])
    n, alpha = cfg.n, cfg.alpha
    table = kernel_table(n, alpha)
    x0 = _ball_points(rng, 1, n, 0.6)[0]
    g = ZonalExpansion.kernel_slice(table, _ball_points(rng, 1, n, 0.5)[0]) \
        + ZonalExpansion.poisson(_unit(rng, n), 20).scale(0.3)
    f = ZonalExpansion.kernel_slice(table, x0)
    g0 = float(g(x0))
    values = {t: pairing(f, g, alpha, t, rule=ball_rule(n, alpha + t, 128, 96)) for t in (0.5, 1.0, 2.0)}
    c.below("pairing_reproduces", "uniq", max(abs(v - g0) for v in values.values()), 1e-6,
            f"pairings {values}, g(x0) = {g0!r}")
    c.below("pairing_t_independent", "Lpairingabs", abs(values[0.5] - values[2.0]), 1e-6)
    return c.records


def suite_unbounded(cfg: SuiteConfig) -> list[CheckRecord]:
    c = _Checks(cfg)
    n = cfg.n
    M = 2000
    f = unbounded_bloch_example(n, M)
    e1 = np.eye(n)[0]
    for r in (0.9, 0.99, 0.999):
        val = float(f(r * e1))
        m = np.arange(1, M + 1)
        bound = 0.5 * float(np.sum(r ** m / m))
        c.above(f"growth_series_{r:g}", "Lunbdd", val - bound, 0.0, f"f(r e1) = {val!r}, half partial sum {bound!r}")
    val = float(f(0.999 * e1))
    c.above("growth_log_0.999", "Lunbdd", val - 0.5 * math.log(1000.0), 0.0, f"f(0.999 e1) = {val!r}")
    configs = [(0.0, 1.0), (0.0, 0.5)]
    grid = GRIDS[cfg.grid]
    base = bloch_norms(f, configs, grid)
    fine = bloch_norms(f, configs, grid.refined())
    pairs = {"seminorm": (base.seminorm, fine.seminorm), "norm": (base.norm, fine.norm)}
    for key in configs:
        pairs[f"D^{key[1]:g}_{key[0]:g}"] = (base.weighted_sups[key], fine.weighted_sups[key])
    change = {k: abs(b - a) / max(abs(a), abs(b)) for k, (a, b) in pairs.items()}
    c.below("bloch_grid_stability", "Lunbdd", max(change.values()), 0.2,
            f"relative change per estimate: {change}; values {pairs}")
    return c.records


def odd_dim_fit_residuals(n: int, max_degree: int = 30, nodes: int = 40) -> np.ndarray:
    """Max residual of least-squares polynomial fits of ``S_1`` on ``[0, 1]``, degrees ``0..max_degree``.

    Samples sit at the Chebyshev points of the first kind mapped to ``[0, 1]``.
    """
    k = np.arange(nodes)
    r = 0.5 * (1.0 + np.cos((2 * k + 1) * np.pi / (2 * nodes)))
    vals = s_factor(n, 1, r)
    out = []
    for deg in range(max_degree + 1):
        fit = np.polynomial.chebyshev.Chebyshev.fit(r, vals, deg, domain=[0.0, 1.0])
        out.append(float(np.max(np.abs(fit(r) - vals))))
    return np.array(out)


def suite_odd_dim(cfg: SuiteConfig) -> list[CheckRecord]:
    c = _Checks(cfg)
    odd = odd_dim_fit_residuals(3)
    c.above("odd_fit_residual", "Lpolyhar", float(odd.min()), 1e-6,
            f"n = 3, smallest residual over degrees 0..30 (at degree {int(np.argmin(odd))})")
    even = odd_dim_fit_residuals(4, 2)
    c.below("even_fit_residual", "Smr", float(even[2]), 1e-12, "n = 4, degree 2")
    return c.records


def suite_lattice(cfg: SuiteConfig) -> list[CheckRecord]:
    c = _Checks(cfg)
    n, r = cfg.n, cfg.r
    lat = build_lattice(n, r, cfg.r_max, cfg.seed)
    part = Partition(lat)
    C = lat.centers
    sep = math.inf
    for start in range(0, len(C), 1024):
        d = _rho_pairs(C[start:start + 1024], C)
        d[np.arange(d.shape[0]), np.arange(start, start + d.shape[0])] = math.inf
        sep = min(sep, float(d.min()))
    c.above("separation", "lattice", sep, r - 1e-12, f"{len(lat)} centers")
    c.below("covering_radius", "lattice", float(lat.covering_radius), r, "10^4 audit samples")
    half_sum = float(np.sum(((1 - np.einsum("ij,ij->i", C, C)) * (r / 2) / (1 - np.einsum("ij,ij->i", C, C) * r * r / 4)) ** n))
    c.below("half_ball_volume", "LOperT", half_sum, 1.0 + 1e-12, "sum of nu(E_{r/2}(a_m))")
    beta = cfg.alpha + n
    c.truth("weight_sum", "LOperT", float(np.sum((1 - np.einsum("ij,ij->i", C, C)) ** beta)), True,
            "sum of (1-|a_m|^2)^(alpha+n) on the truncated lattice")

    rng = np.random.default_rng([cfg.seed, 8])
    pts = _ball_points(rng, 10_000, n, cfg.r_max)
    idx = part.index(pts)
    d_own = np.array([float(rho(p, C[m])) for p, m in zip(pts, idx)])
    nb_half = lat.neighbors(pts, r / 2)
    chain_bad = int(np.sum(d_own >= r)) + sum(int(h.size > 0 and h[0] != m) for h, m in zip(nb_half, idx))
    c.below("partition_inclusions", "partition", chain_bad, 1, "E_{r/2}(a_m) in E_m in E_r(a_m) on 10^4 points")
    sub = pts[:300]
    rec = np.array([part.index_by_recursion(p) for p in sub])
    c.below("partition_recursion", "partition", int(np.sum(rec != idx[:300])), 1,
            "closed-form index equals the inductive definition on 300 points")

    # measures: bracket against (1 - |a_m|^2)^(beta + n) and the disjoint-union total
    b = cfg.alpha + cfg.t
    count = min(len(lat), 200)
    sel = np.linspace(0, len(lat) - 1, count).astype(int)
    est = np.array([part.measure(int(m), b)[0] for m in sel])
    ratio = est / (1 - np.einsum("ij,ij->i", C[sel], C[sel])) ** (b + n)
    lo = ((1 - r / 2) / (1 + r / 2)) ** b * (r / 2) ** n / (1 + r / 2) ** (2 * n)
    hi = ((1 + r) / (1 - r)) ** b * r ** n / (1 - r) ** (2 * n)
    c.truth("measure_bracket", "LOperU", [float(ratio.min()), float(ratio.max())],
            bool(ratio.min() >= lo and ratio.max() <= hi), f"theoretical bracket [{lo!r}, {hi!r}], {count} cells")

    viol = 0
    for m in sel[:50]:
        ball = pseudo_ball(C[m], r)
        y = ball.center + _ball_points(rng, 200, n, ball.radius)
        q = (1 - np.einsum("ij,ij->i", y, y)) / (1 - C[m] @ C[m])
        viol += int(np.sum((q < (1 - r) / (1 + r)) | (q > (1 + r) / (1 - r))))
    c.below("ratio_bracket_samples", "Lratiobracket", viol, 1, "200 samples in each of 50 cells")
    return c.records


def suite_atomic(cfg: SuiteConfig) -> list[CheckRecord]:
    c = _Checks(cfg)
    n = cfg.n
    lat = build_lattice(n, cfg.r, cfg.r_max, cfg.seed)
    part = Partition(lat)
    r_cert = round(certified_radius(cfg.r_max), 6)
    tests = default_test_set(n, cfg.seed, cfg.alpha)
    systems = {mode: AtomicSystem(lat, AtomicConfig(cfg.alpha, cfg.t, mode, r_cert=r_cert), partition=part)
               for mode in MODES}
    main = systems["kernel-bloch"]
    q = main.contraction_estimate(tests)
    c.below("contraction", "TAtomic", q, 0.8, f"{len(lat)} centers, r = {cfg.r}, R_max = {cfg.r_max}, certified radius {r_cert}")
    results = {}
    failures = []
    for mode, system in systems.items():
        for i, f in enumerate(tests):
            try:
                results[mode, i] = system.decompose(f, contraction=q)
            except ConvergenceError as err:
                results[mode, i] = err.result
                failures.append(f"{mode}/{i}: residual {err.history[-1] / err.history[0]:.3g} of initial")
            except RefusalError as err:
                failures.append(f"{mode}/{i}: {err}")
    c.truth("converged", "TAtomic", len(failures), not failures, "; ".join(failures))
    main_res = [results[k] for k in results if k[0] == "kernel-bloch"]
    if main_res:
        c.below("step_ratio", "TAtomic", max(d.max_ratio for d in main_res), q + 0.1, "largest residual ratio per step")
        c.below("reconstruction", "atomicrepr", max(d.reconstruction_error for d in main_res), 1e-3,
                f"sup |f - T lambda| / sup |f| on |x| <= {r_cert}")
        brackets = [d.coefficient_bracket for d in main_res if d.f_bloch_norm > 0]
        c.below("coefficient_bracket", "TAtomic", max(brackets) / min(brackets), 5.0,
                f"||lambda||_inf / ||f||_B per function: {brackets}")
        radii = main.radii
        tails = [float(np.max(np.abs(d.coefficients.values[radii > 0.9]), initial=0.0)) / d.coefficients.sup
                 for d in main_res if d.coefficients.sup > 0]
        c.below("little_bloch_tail", "TAtomic", max(tails), 0.1,
                "max |lambda_m| over |a_m| > 0.9 relative to ||lambda||_inf"
                + ("" if np.any(radii > 0.9) else " (no centers beyond 0.9 on this lattice)"))
    pts = main.fine.points(n)
    worst = 0.0
    for i, f in enumerate(tests):
        if ("kernel-bloch", i) in results and ("weight-power", i) in results:
            a = systems["kernel-bloch"].reconstruct(results["kernel-bloch", i].coefficients)
            b = systems["weight-power"].reconstruct(results["weight-power", i].coefficients)
            scale = float(np.max(np.abs(evaluate(f, pts))))
            worst = max(worst, float(np.max(np.abs(a - b))) / scale if scale else 0.0)
    c.below("mode_equivalence", "Repr2", worst, 1e-3, "reconstructions under both normalizations")
    return c.records


_RUNNERS: dict[str, Callable[[SuiteConfig], list[CheckRecord]]] = {
    "geometry": suite_geometry,
    "specialfn": suite_specialfn,
    "quadrature": suite_quadrature,
    "kernels": suite_kernels,
    "projection": suite_projection,
    "duality-pairing": suite_duality,
    "unbounded-bloch": suite_unbounded,
    "odd-dim-witness": suite_odd_dim,
    "lattice": suite_lattice,
    "atomic": suite_atomic,
}


def run_suite(name: str, cfg: SuiteConfig | None = None) -> Report:
    """Run one suite and return its report.

    Raises
    ------
    InputError
        For an unknown suite name.
    """
    if name not in _RUNNERS:
        raise InputError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    cfg = cfg or SuiteConfig()
    start = time.perf_counter()
    checks = _RUNNERS[name](cfg)
    stamp = {"utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
             "wall_time": time.perf_counter() - start}
    return Report(name, cfg.as_dict(), checks, stamp)
