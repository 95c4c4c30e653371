"""Atomic decomposition of Bloch functions over a truncated r-lattice.

For a lattice ``{a_m}`` with partition ``{E_m}`` the two operators are

    T lambda(x) = sum_m lambda_m R_alpha(x, a_m) / N_m,
    (U f)_m     = D^t_alpha f(a_m) N_m nu_{alpha+t}(E_m),

where ``N_m`` is either the grid estimate of the Bloch norm of
``R_alpha(., a_m)`` (``"kernel-bloch"`` mode) or ``(1 - |a_m|^2)^(-(alpha+n))``
(``"weight-power"`` mode).  ``TU f`` is a Riemann sum for the identity
``f = int R_alpha(., y) D^t_alpha f(y) d nu_{alpha+t}(y)``, so ``I - TU`` is
small for fine lattices and ``f = T lambda`` is solved by the Neumann series
``lambda = sum_k U g_k`` with ``g_{k+1} = g_k - TU g_k``.

Iterates are kept lazily as ``g_k = f - T lambda_k``.  Because
``D^t_alpha R_alpha(., a) = R_{alpha+t}(., a)``, every quantity the iteration
needs is a matrix-vector product with kernel matrices for ``alpha + t``
between grid points and centers.  Norms inside the iteration use the
equivalent Bloch norm

    |g(0)| + sup_grid (1 - |x|^2)^t |D^t_alpha g(x)|

on a coarse grid inside the certified radius; the final reconstruction is
checked on a finer grid.  The lattice is finite, so every claim is made for
``|x| <= r_cert`` only.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConvergenceError, InputError, RefusalError, ResourceError, TruncationError
from .kernels import KernelTable, kernel_matrix, kernel_table
from .lattice import Lattice, Partition
from .operators import BlochGrid, ZonalExpansion, bloch_norms, dts_series, evaluate, unbounded_bloch_example
from .quadrature import cm_coefficients

MODES = ("kernel-bloch", "weight-power")
#: Largest lattice for which dense kernel matrices are formed.
DEFAULT_MAX_CENTERS = 10_000
#: Coarse grid used inside the iteration.
COARSE_GRID = dict(per_octave=2, linear=8, sphere_degree=8)


@dataclass(frozen=True)
class AtomicConfig:
    """Parameters of a decomposition.

    Parameters
    ----------
    alpha : float
        Kernel weight, ``alpha > -1``.
    t : float
        Order of the derivative used by ``U``, ``t > 0``.
    mode : {"kernel-bloch", "weight-power"}
        Choice of the normalizers ``N_m``.
    max_iter : int
        Cap on Neumann iterations.
    tol : float
        Stop once the residual norm is below ``tol`` times the norm of ``f``.
    kernel_tol : float
        Absolute truncation tolerance of the kernel matrices.
    r_cert : float
        Radius of the region on which norms and reconstructions are measured.
    """

    alpha: float = 0.0
    t: float = 1.0
    mode: str = "kernel-bloch"
    max_iter: int = 60
    tol: float = 1e-4
    kernel_tol: float = 1e-10
    r_cert: float = 0.9

    def __post_init__(self):
        if not self.alpha > -1:
            raise InputError("alpha must exceed -1")
        if not self.t > 0:
            raise InputError("t must be positive")
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}")
        if self.max_iter < 1:
            raise InputError("max_iter must be at least 1")
        if not self.tol > 0 or not self.kernel_tol > 0:
            raise InputError("tolerances must be positive")
        if not 0 < self.r_cert < 1:
            raise InputError("r_cert must lie in (0, 1)")

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "t": self.t, "mode": self.mode, "max_iter": self.max_iter,
                "tol": self.tol, "kernel_tol": self.kernel_tol, "r_cert": self.r_cert}


@dataclass(frozen=True)
class CoefficientSequence:
    """One real coefficient per lattice center."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise InputError("coefficients must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    @property
    def sup(self) -> float:
        """The ``l^infinity`` norm."""
        return float(np.max(np.abs(self.values), initial=0.0))


def _table_for(n: int, alpha: float, q: float, tol: float, start: int = 1000) -> KernelTable:
    """Kernel table large enough for ``|x||y| = q`` at ``tol``."""
    M_max = start
    while True:
        table = kernel_table(n, alpha, M_max)
        try:
            table.order_for(q, tol)
            return table
        except TruncationError as err:
            M_max = int(math.ceil(err.needed_order / 500.0) * 500)


def kernel_bloch_norm(n: int, alpha: float, radius: float, grid: BlochGrid | None = None,
                      tol: float = 1e-6) -> float:
    """Grid estimate of ``|R_alpha(0, a)| + p_B(R_alpha(., a))`` at ``|a| = radius``.

    The norm is invariant under rotations of ``a``, so ``a = radius e_1``.
    """
    grid = grid or BlochGrid()
    q = radius * grid.r_max
    table = _table_for(n, alpha, q, tol)
    a = radius * np.eye(n)[0]
    f = ZonalExpansion.kernel_slice(table, a, M=table.order_for(q, tol))
    return bloch_norms(f, (), grid).norm


@lru_cache(maxsize=16)
def _kernel_bloch_profile(n: int, alpha: float, R_max: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    s = R_max * np.sin(0.5 * np.pi * np.arange(nodes) / (nodes - 1))
    vals = np.array([kernel_bloch_norm(n, alpha, float(r)) for r in s])
    return s, vals * (1.0 - s * s) ** (alpha + n)


def kernel_bloch_normalizers(n: int, alpha: float, radii: np.ndarray, R_max: float, nodes: int = 12) -> np.ndarray:
    """``N(|a|)`` for the kernel-Bloch mode from a tabulated radial profile.

    The smooth factor ``N(s) (1 - s^2)^(alpha+n)`` is interpolated
    monotonically between ``nodes`` radii on ``[0, R_max]``.
    """
    s, prof = _kernel_bloch_profile(int(n), float(alpha), float(R_max), int(nodes))
    radii = np.asarray(radii, dtype=float)
    return PchipInterpolator(s, prof)(radii) / (1.0 - radii * radii) ** (alpha + n)


class AtomicSum:
    """The finite sum ``x -> sum_m coef_m R(x, a_m)`` for one kernel table."""

    def __init__(self, table: KernelTable, centers: np.ndarray, coef: np.ndarray, tol: float = 1e-10):
        self.table = table
        self.centers = centers
        self.coef = np.asarray(coef, dtype=float)
        self.tol = tol

    @property
    def n(self) -> int:
        return self.table.n

    def __call__(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        lead = x.shape[:-1]
        pts = x.reshape(-1, self.n)
        live = self.coef != 0
        if not np.any(live):
            out = np.zeros(len(pts))
        else:
            out = kernel_matrix(self.table, pts, self.centers[live], self.tol) @ self.coef[live]
        out = out.reshape(lead)
        return float(out) if out.ndim == 0 else out

    def to_expansion(self, r_max: float = 0.999, tol: float = 1e-8) -> ZonalExpansion:
        """Exact series form (one pole per nonzero center) truncated for ``|x| <= r_max``."""
        live = np.flatnonzero(self.coef)
        if live.size == 0:
            return ZonalExpansion.constant(self.n, 0.0)
        q = float(np.linalg.norm(self.centers[live], axis=1).max()) * r_max
        table = _table_for(self.n, self.table.alpha, q, tol)
        M = table.order_for(q, tol)
        out = None
        for m in live:
            term = ZonalExpansion.kernel_slice(table, self.centers[m], M=M).scale(self.coef[m])
            out = term if out is None else out + term
        return out


@dataclass
class Decomposition:
    """Result of :meth:`AtomicSystem.decompose`."""

    coefficients: CoefficientSequence
    history: list[float]
    contraction: float
    iterations: int
    f_norm: float
    f_bloch_norm: float
    reconstruction_error: float
    ratios: list[float] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def max_ratio(self) -> float:
        return max(self.ratios, default=0.0)

    @property
    def coefficient_bracket(self) -> float:
        """``||lambda||_inf / ||f||_B`` with the grid Bloch norm of ``f``."""
        return self.coefficients.sup / self.f_bloch_norm if self.f_bloch_norm else 0.0


class AtomicSystem:
    """Operators ``T`` and ``U`` for one lattice and configuration.

    Kernel matrices, cell measures and normalizers are computed on first use
    and reused by every later call.

    Raises
    ------
    ResourceError
        If the lattice has more than ``max_centers`` centers.
    """

    def __init__(self, lattice: Lattice, cfg: AtomicConfig, *, partition: Partition | None = None,
                 max_centers: int = DEFAULT_MAX_CENTERS, rel_se: float = 0.01):
        if len(lattice) > max_centers:
            raise ResourceError(
                f"lattice has {len(lattice)} centers; dense kernel matrices are limited to {max_centers}"
            )
        if cfg.r_cert >= 1.0 or lattice.R_max <= 0:
            raise InputError("invalid certification radius")
        self.lattice = lattice
        self.cfg = cfg
        self.partition = partition or Partition(lattice)
        self.rel_se = rel_se
        n = lattice.n
        self.n = n
        radii = np.linalg.norm(lattice.centers, axis=1)
        self.radii = radii
        self._weight_power = (1.0 - radii * radii) ** (cfg.alpha + n)
        r_top = float(radii.max(initial=0.0))
        self.table_alpha = _table_for(n, cfg.alpha, r_top * r_top, cfg.kernel_tol)
        self.table_shift = _table_for(n, cfg.alpha + cfg.t, r_top * r_top, cfg.kernel_tol)
        self.c0_alpha = float(cm_coefficients(n, cfg.alpha, 0)[0])
        self.coarse = BlochGrid(r_max=cfg.r_cert, **COARSE_GRID)
        self.fine = BlochGrid(r_max=cfg.r_cert)
        self._grid_pts = self.coarse.points(n)
        self._grid_w = (1.0 - np.einsum("ij,ij->i", self._grid_pts, self._grid_pts)) ** cfg.t
        self._cache: dict[str, np.ndarray] = {}

    # cached ingredients ---------------------------------------------------

    @property
    def normalizers(self) -> np.ndarray:
        """``N_m`` for the configured mode."""
        if "N" not in self._cache:
            if self.cfg.mode == "weight-power":
                self._cache["N"] = 1.0 / self._weight_power
            else:
                self._cache["N"] = kernel_bloch_normalizers(self.n, self.cfg.alpha, self.radii, self.lattice.R_max)
        return self._cache["N"]

    @property
    def measures(self) -> np.ndarray:
        """Monte Carlo ``nu_{alpha+t}(E_m)``."""
        if "mu" not in self._cache:
            self._cache["mu"] = self.partition.measures(self.cfg.alpha + self.cfg.t, self.rel_se)[0]
        return self._cache["mu"]

    def _matrix(self, key: str, table: KernelTable, pts: np.ndarray) -> np.ndarray:
        if key not in self._cache:
            self._cache[key] = kernel_matrix(table, pts, self.lattice.centers, self.cfg.kernel_tol)
        return self._cache[key]

    @property
    def shifted_center_matrix(self) -> np.ndarray:
        """``R_{alpha+t}(a_i, a_j)``."""
        return self._matrix("Kcc", self.table_shift, self.lattice.centers)

    @property
    def shifted_grid_matrix(self) -> np.ndarray:
        """``R_{alpha+t}(x_i, a_j)`` on the coarse grid."""
        return self._matrix("Kgc", self.table_shift, self._grid_pts)

    # operators ------------------------------------------------------------

    def op_T(self, lam) -> AtomicSum:
        """``T lambda`` as an evaluator."""
        lam = lam.values if isinstance(lam, CoefficientSequence) else np.asarray(lam, dtype=float)
        if lam.shape != (len(self.lattice),):
            raise InputError("need one coefficient per center")
        return AtomicSum(self.table_alpha, self.lattice.centers, lam / self.normalizers, self.cfg.kernel_tol)

    def weight_sum(self, lam) -> float:
        """``sum_m |lambda_m| (1 - |a_m|^2)^(alpha+n)``, the sum of the normalized-term sup bounds."""
        lam = lam.values if isinstance(lam, CoefficientSequence) else np.asarray(lam, dtype=float)
        return float(np.sum(np.abs(lam) * self._weight_power))

    def op_U(self, f) -> CoefficientSequence:
        """``(U f)_m = D^t_alpha f(a_m) N_m nu_{alpha+t}(E_m)`` for a series or an :class:`AtomicSum` in ``alpha``."""
        return CoefficientSequence(self._dt_at_centers(f) * self.normalizers * self.measures)

    def _dt_at_centers(self, f) -> np.ndarray:
        cfg = self.cfg
        if isinstance(f, ZonalExpansion):
            return np.asarray(evaluate(dts_series(f, cfg.alpha, cfg.t), self.lattice.centers), dtype=float).reshape(-1)
        if isinstance(f, AtomicSum) and f.table.alpha == cfg.alpha:
            # D^t_alpha R_alpha(., a) = R_{alpha+t}(., a)
            live = f.coef != 0
            if not np.any(live):
                return np.zeros(len(self.lattice))
            return kernel_matrix(self.table_shift, self.lattice.centers, f.centers[live], cfg.kernel_tol) @ f.coef[live]
        raise InputError("U needs a ZonalExpansion or an AtomicSum built for the configured alpha")

    # iteration ------------------------------------------------------------

    def _data(self, f: ZonalExpansion) -> tuple[float, np.ndarray, np.ndarray]:
        if f.n != self.n:
            raise InputError("function dimension does not match the lattice")
        df = dts_series(f, self.cfg.alpha, self.cfg.t)
        return (float(evaluate(f, np.zeros(self.n))),
                np.asarray(evaluate(df, self.lattice.centers), dtype=float).reshape(-1),
                np.asarray(evaluate(df, self._grid_pts), dtype=float).reshape(-1))

    def _residual(self, data, lam: np.ndarray) -> tuple[np.ndarray, float]:
        """``D^t g(a_m)`` and the coarse norm of ``g = f - T lambda``."""
        f0, dfc, dfg = data
        coef = lam / self.normalizers
        if np.any(coef):
            dc = dfc - self.shifted_center_matrix @ coef
            dg = dfg - self.shifted_grid_matrix @ coef
            g0 = f0 - self.c0_alpha * coef.sum()
        else:
            dc, dg, g0 = dfc, dfg, f0
        return dc, abs(g0) + float(np.max(self._grid_w * np.abs(dg)))

    def norm_est(self, f: ZonalExpansion) -> float:
        """Coarse equivalent Bloch norm ``|f(0)| + sup (1-|x|^2)^t |D^t_alpha f|`` on ``|x| <= r_cert``."""
        return self._residual(self._data(f), np.zeros(len(self.lattice)))[1]

    def contraction_ratio(self, f: ZonalExpansion) -> float:
        """``||(I - TU) f|| / ||f||`` in the coarse norm."""
        data = self._data(f)
        zero = np.zeros(len(self.lattice))
        dc, norm0 = self._residual(data, zero)
        if norm0 == 0:
            return 0.0
        return self._residual(data, dc * self.normalizers * self.measures)[1] / norm0

    def contraction_estimate(self, test_set: Sequence[ZonalExpansion]) -> float:
        """Largest contraction ratio over ``test_set`` (a lower bound for ``||I - TU||``)."""
        if not test_set:
            raise InputError("test set must not be empty")
        return max(self.contraction_ratio(f) for f in test_set)

    def decompose(self, f: ZonalExpansion, test_set: Sequence[ZonalExpansion] | None = None,
                  contraction: float | None = None) -> Decomposition:
        """Neumann iteration for ``f = T lambda``.

        Parameters
        ----------
        f : ZonalExpansion
        test_set : sequence of ZonalExpansion, optional
            Used for the contraction estimate (defaults to :func:`default_test_set`).
        contraction : float, optional
            A previously computed estimate, which skips the test-set sweep.

        Raises
        ------
        RefusalError
            If the contraction estimate is not below one.
        ConvergenceError
            If ``max_iter`` iterations do not reach the tolerance; the
            partial :class:`Decomposition` is attached as ``err.result``.
        """
        start = time.perf_counter()
        if contraction is None:
            contraction = self.contraction_estimate(test_set or default_test_set(self.n))
        if not contraction < 1.0:
            raise RefusalError(f"I - TU is not contractive on the test set (estimate {contraction:.4g})")
        cfg = self.cfg
        data = self._data(f)
        lam = np.zeros(len(self.lattice))
        scale = self.normalizers * self.measures
        history: list[float] = []
        dc, norm = self._residual(data, lam)
        f_norm = norm
        history.append(norm)
        iterations = 0
        while norm > cfg.tol * f_norm and iterations < cfg.max_iter:
            lam = lam + dc * scale
            dc, norm = self._residual(data, lam)
            history.append(norm)
            iterations += 1
        ratios = [b / a for a, b in zip(history, history[1:]) if a > 0]
        coeffs = CoefficientSequence(lam)
        result = Decomposition(coeffs, history, float(contraction), iterations, f_norm,
                               bloch_norms(f).norm if f_norm else 0.0,
                               self.reconstruction_error(f, coeffs), ratios, time.perf_counter() - start)
        if norm > cfg.tol * f_norm:
            err = ConvergenceError(f"no convergence after {cfg.max_iter} iterations", history)
            err.result = result
            raise err
        return result

    def reconstruct(self, lam) -> np.ndarray:
        """``T lambda`` on the fine grid inside ``r_cert`` (kernel matrix cached)."""
        lam = lam.values if isinstance(lam, CoefficientSequence) else np.asarray(lam, dtype=float)
        K = self._matrix("Kfine", self.table_alpha, self.fine.points(self.n))
        return K @ (lam / self.normalizers)

    def reconstruction_error(self, f: ZonalExpansion, lam) -> float:
        """``sup |f - T lambda| / sup |f|`` on the fine grid inside ``r_cert``."""
        fv = np.asarray(evaluate(f, self.fine.points(self.n)), dtype=float)
        scale = float(np.max(np.abs(fv)))
        diff = float(np.max(np.abs(fv - self.reconstruct(lam))))
        if scale == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / scale


def certified_radius(R_max: float, margin: float = 0.75) -> float:
    """Radius lying ``margin`` inside ``R_max`` in the hyperbolic distance ``beta``.

    With the default margin, ``R_max = 0.95`` gives about ``0.9``.
    """
    return float(np.tanh(np.arctanh(R_max) - margin / 2.0))


def default_test_set(n: int, seed: int = 0, alpha: float = 0.0) -> list[ZonalExpansion]:
    """Ten little-Bloch test functions.

    A constant, spherical-harmonic extensions of degrees 1 to 5 with random
    poles, two kernel slices, a truncated Poisson kernel and a truncated
    version of the unbounded Bloch example.
    """
    rng = np.random.default_rng(seed)

    def pole() -> np.ndarray:
        v = rng.standard_normal(n)
        return v / np.linalg.norm(v)

    out = [ZonalExpansion.constant(n, 1.0)]
    for m in range(1, 6):
        out.append(ZonalExpansion.from_terms(n, [(m, [(1.0, pole()), (0.5, pole())])]))
    table = kernel_table(n, alpha, 400)
    for radius in (0.3, 0.6):
        f = ZonalExpansion.kernel_slice(table, radius * pole(), r_max=0.999, tol=1e-10)
        out.append(f.scale(1.0 / f.weights[0, 0]))
    out.append(ZonalExpansion.poisson(pole(), 12))
    out.append(unbounded_bloch_example(n, 24))
    return out


def decomposition_report(system: AtomicSystem, result: Decomposition, label: str = "") -> dict:
    """JSON-ready description of one decomposition."""
    lat = system.lattice
    radii = system.radii
    lam = result.coefficients.values
    outer = radii > 0.9
    return {
        "function": label,
        "lattice": {"n": lat.n, "r": lat.r, "R_max": lat.R_max, "seed": lat.seed, "count": len(lat),
                    "covering_radius": lat.covering_radius},
        "config": system.cfg.as_dict(),
        "contraction_estimate": result.contraction,
        "iterations": result.iterations,
        "residual_history": list(result.history),
        "max_step_ratio": result.max_ratio,
        "f_norm_est": result.f_norm,
        "f_bloch_norm": result.f_bloch_norm,
        "lambda_sup": result.coefficients.sup,
        "lambda_over_f": result.coefficient_bracket,
        "lambda_tail_sup": float(np.max(np.abs(lam[outer]), initial=0.0)),
        "weight_sum": system.weight_sum(lam),
        "reconstruction_error": result.reconstruction_error,
        "lambda": lam.tolist(),
    }
