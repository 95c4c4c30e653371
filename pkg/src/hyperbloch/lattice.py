"""Separated sequences, r-lattices on a truncated ball and their partitions.

A lattice is built greedily from a scrambled Sobol stream whose points are
spread uniformly with respect to the invariant measure
``d tau = (1 - |x|^2)^(-n) d nu`` on the ball of radius ``R_max``.  A
candidate is accepted when its pseudo-hyperbolic distance to every accepted
center is at least ``r``; construction stops after a long run of
rejections, and a random covering audit then checks that every sampled
point lies within ``r`` of some center.

Neighbor queries use a Euclidean KD-tree together with the bound

    rho(x, a) < r  implies  |x - a| < (1 - |x|^2)(r + |x| r^2) / (1 - |x|^2 r^2),

which follows from the Euclidean description of ``E_r(x)``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, special
from scipy.spatial import cKDTree
from scipy.stats import qmc

from .errors import ConstructionError, CoverageError, InputError, PrecisionError, ResourceError
from .geometry import pseudo_ball

#: Consecutive rejections that end the greedy construction.
REJECTION_RUN = 100_000
#: Size of the covering audit.
AUDIT_SAMPLES = 10_000
#: Gap-filling rounds after the main stream, and batches of 65536 per round.
REPAIR_ROUNDS = 8
REPAIR_BATCHES = 32
#: Default cap on the number of centers.
DEFAULT_MAX_CENTERS = 50_000


def _rho_to(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Pseudo-hyperbolic distances from one point to many centers."""
    diff = centers - x
    num = np.einsum("ij,ij->i", diff, diff)
    br2 = 1.0 - 2.0 * centers @ x + np.einsum("ij,ij->i", centers, centers) * (x @ x)
    return np.sqrt(num / br2)


def _rho_pairs(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Matrix of pseudo-hyperbolic distances, shape ``(len(x), len(centers))``."""
    xx = np.einsum("ij,ij->i", x, x)
    cc = np.einsum("ij,ij->i", centers, centers)
    dot = x @ centers.T
    num = np.maximum(xx[:, None] + cc[None, :] - 2.0 * dot, 0.0)
    br2 = 1.0 - 2.0 * dot + xx[:, None] * cc[None, :]
    return np.sqrt(num / br2)


def search_radius(x: np.ndarray, r: float) -> np.ndarray:
    """Euclidean radius containing ``E_r(x)`` around ``x`` (slightly inflated)."""
    xx = np.einsum("...i,...i->...", x, x)
    nx = np.sqrt(xx)
    return (1.0 - xx) * (r + nx * r * r) / (1.0 - xx * r * r) * (1.0 + 1e-9) + 1e-15


def invariant_volume(n: int, radius: float) -> float:
    """``tau(B_radius) = n int_0^radius s^(n-1) (1 - s^2)^(-n) ds``."""
    val, _ = integrate.quad(lambda s: n * s ** (n - 1) * (1.0 - s * s) ** (-n), 0.0, radius, limit=200)
    return val


def min_center_count(n: int, r: float, R_max: float) -> int:
    """Lower bound on the size of any family of ``E_r`` balls covering ``B_R_max``.

    Every ``E_r(a)`` has the same invariant volume as ``E_r(0) = B_r``.
    """
    return math.ceil(invariant_volume(n, R_max) / invariant_volume(n, r))


class _RadialSampler:
    """Inverse CDF of the invariant radial density on ``[0, R_max]``.

    In the variable ``s = artanh(|x|)`` the density is proportional to
    ``(sinh(2s) / 2)^(n-1)``, which is smooth and tabulated densely.
    """

    def __init__(self, n: int, R_max: float, size: int = 8193):
        s = np.linspace(0.0, np.arctanh(R_max), size)
        dens = (np.sinh(2.0 * s) / 2.0) ** (n - 1)
        cdf = integrate.cumulative_trapezoid(dens, s, initial=0.0)
        self._cdf = cdf / cdf[-1]
        self._s = s

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return np.tanh(np.interp(u, self._cdf, self._s))


def _candidate_batches(n: int, R_max: float, seed: int, batch: int = 4096):
    sobol = qmc.Sobol(d=n + 1, scramble=True, seed=seed)
    radial = _RadialSampler(n, R_max)
    while True:
        u = sobol.random(batch)
        u = np.clip(u, 1e-12, 1.0 - 1e-12)
        g = special.ndtri(u[:, 1:])
        dirs = g / np.linalg.norm(g, axis=1)[:, None]
        pts = radial(u[:, 0])[:, None] * dirs
        order = np.argsort(np.linalg.norm(pts, axis=1), kind="stable")
        yield pts[order]


@dataclass(frozen=True)
class Lattice:
    """Ordered ``r``-separated centers in the ball of radius ``R_max``.

    Attributes
    ----------
    covering_radius : float or None
        Largest sampled distance to the nearest center from the construction
        audit (``None`` for lattices loaded from text).
    """

    n: int
    r: float
    R_max: float
    seed: int
    centers: np.ndarray
    covering_radius: float | None = None
    _tree: cKDTree = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        centers = np.ascontiguousarray(self.centers, dtype=float).reshape(-1, self.n)
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "_tree", cKDTree(centers) if len(centers) else None)

    def __len__(self) -> int:
        return self.centers.shape[0]

    def neighbors(self, x: np.ndarray, r: float | None = None) -> list[np.ndarray]:
        """Center indices ``m`` with ``rho(x, a_m) < r`` for each row of ``x``."""
        r = self.r if r is None else r
        x = np.atleast_2d(x)
        if self._tree is None:
            return [np.zeros(0, dtype=int) for _ in x]
        hits = self._tree.query_ball_point(x, search_radius(x, r))
        out = []
        for xi, h in zip(x, hits):
            h = np.asarray(sorted(h), dtype=int)
            if h.size:
                h = h[_rho_to(xi, self.centers[h]) < r]
            out.append(h)
        return out

    def nearest_rho(self, x: np.ndarray) -> np.ndarray:
        """Smallest ``rho`` from each row of ``x`` to the centers (``1.0`` if none within ``r``)."""
        x = np.atleast_2d(x)
        out = np.ones(len(x))
        if self._tree is None:
            return out
        hits = self._tree.query_ball_point(x, search_radius(x, self.r))
        for i, (xi, h) in enumerate(zip(x, hits)):
            if h:
                out[i] = float(np.min(_rho_to(xi, self.centers[np.asarray(h)])))
        return out

    # serialization --------------------------------------------------------

    def to_text(self) -> str:
        """Plain-text form: header ``n r R_max seed count``, then one center per line."""
        buf = io.StringIO()
        buf.write(f"{self.n} {self.r!r} {self.R_max!r} {self.seed} {len(self)}\n")
        for c in self.centers:
            buf.write(" ".join(repr(float(v)) for v in c) + "\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "Lattice":
        lines = text.strip().splitlines()
        if not lines:
            raise InputError("empty lattice file")
        head = lines[0].split()
        if len(head) != 5:
            raise InputError("lattice header must read 'n r R_max seed count'")
        n, r, R_max, seed, count = int(head[0]), float(head[1]), float(head[2]), int(head[3]), int(head[4])
        rows = [[float(v) for v in line.split()] for line in lines[1:]]
        if len(rows) != count or any(len(row) != n for row in rows):
            raise InputError("lattice body does not match its header")
        return cls(n, r, R_max, seed, np.array(rows).reshape(count, n))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "Lattice":
        return cls.from_text(Path(path).read_text())


def _invariant_batch(n: int, sampler: _RadialSampler, rng: np.random.Generator, size: int) -> np.ndarray:
    g = rng.standard_normal((size, n))
    pts = sampler(rng.random(size))[:, None] * g / np.linalg.norm(g, axis=1)[:, None]
    return pts[np.argsort(np.linalg.norm(pts, axis=1), kind="stable")]


def _greedy_pass(batches, accepted: np.ndarray, r: float, rejection_run: int | None,
                 max_centers: int) -> np.ndarray:
    """Screen candidate batches against ``accepted`` and return the enlarged center array.

    Stops after ``rejection_run`` consecutive rejections, or when the batches
    run out if ``rejection_run`` is ``None``.
    """
    tree = cKDTree(accepted) if len(accepted) else None
    limit = math.inf if rejection_run is None else rejection_run
    run = 0
    for batch in batches:
        pending: list[np.ndarray] = []
        radii = search_radius(batch, r)
        if tree is not None:
            # Cheap vectorized rejection against the nearest accepted centers.
            _, idx = tree.query(batch, k=min(8, len(accepted)))
            near = accepted[idx.reshape(len(batch), -1)]
            diff = near - batch[:, None, :]
            bx = np.einsum("ij,ij->i", batch, batch)
            br2 = 1.0 - 2.0 * np.einsum("ikj,ij->ik", near, batch) + np.einsum("ikj,ikj->ik", near, near) * bx[:, None]
            survivors = np.flatnonzero(~np.any(np.einsum("ikj,ikj->ik", diff, diff) < r * r * br2, axis=1))
            hits = tree.query_ball_point(batch[survivors], radii[survivors])
        else:
            survivors = np.arange(len(batch))
            hits = [[] for _ in survivors]
        prev = -1
        for i, h in zip(survivors, hits):
            # candidates between the previous survivor and this one were rejected
            run += i - prev - 1
            prev = i
            if run >= limit:
                break
            x, rad = batch[i], radii[i]
            ok = not (h and np.any(_rho_to(x, accepted[np.asarray(h)]) < r))
            if ok and pending:
                near = [p for p in pending if np.sum((p - x) ** 2) < rad * rad]
                if near and np.any(_rho_to(x, np.array(near)) < r):
                    ok = False
            if ok:
                pending.append(x)
                run = 0
            else:
                run += 1
                if run >= limit:
                    break
        else:
            run += len(batch) - prev - 1
        if pending:
            accepted = np.vstack([accepted, np.array(pending)])
            tree = cKDTree(accepted)
            if len(accepted) > max_centers:
                raise ResourceError(f"lattice exceeded the budget of {max_centers} centers")
        if run >= limit:
            break
    return accepted


def build_lattice(n: int, r: float, R_max: float, seed: int, *, max_centers: int = DEFAULT_MAX_CENTERS,
                  rejection_run: int = REJECTION_RUN, audit_samples: int = AUDIT_SAMPLES) -> Lattice:
    """Greedy ``r``-lattice of the ball of radius ``R_max``.

    Candidates arrive in batches sorted by norm; the final centers are
    re-sorted by norm (stable) so low indices sit near the origin.  After the
    Sobol stream ends, seeded random candidates fill any remaining gaps.

    Raises
    ------
    ResourceError
        If the covering lower bound or the running count exceeds ``max_centers``.
    ConstructionError
        If an audit sample is farther than ``r`` from every center.
    """
    if int(n) != n or n < 2:
        raise InputError("dimension must be an integer >= 2")
    if not 0 < r < 0.5:
        raise InputError("r must lie in (0, 1/2)")
    if not 0 < R_max <= 0.999:
        raise InputError("R_max must lie in (0, 0.999]")
    bound = min_center_count(n, r, R_max)
    if bound > max_centers:
        raise ResourceError(
            f"an {r}-lattice of the ball of radius {R_max} in dimension {n} needs at least "
            f"{bound} centers, above the budget of {max_centers}"
        )
    accepted = _greedy_pass(_candidate_batches(n, R_max, seed), np.zeros((0, n)), r, rejection_run, max_centers)
    # Gap filling: an uncovered point is r-separated from every center, so
    # further seeded random candidates are screened by the same rule until a
    # whole round adds nothing.
    rng = np.random.default_rng([seed, 0x9A9])
    sampler = _RadialSampler(n, R_max)
    for _ in range(REPAIR_ROUNDS):
        before = len(accepted)
        rounds = (_invariant_batch(n, sampler, rng, 1 << 16) for _ in range(REPAIR_BATCHES))
        accepted = _greedy_pass(rounds, accepted, r, None, max_centers)
        if len(accepted) == before:
            break
    order = np.argsort(np.linalg.norm(accepted, axis=1), kind="stable")
    lattice = Lattice(int(n), float(r), float(R_max), int(seed), accepted[order])
    worst, radius = audit_covering(lattice, audit_samples, seed)
    if radius >= r:
        raise ConstructionError(f"covering audit failed: sample at distance {radius:.6g} >= r", worst)
    return Lattice(lattice.n, lattice.r, lattice.R_max, lattice.seed, lattice.centers, radius)


def audit_covering(lattice: Lattice, samples: int = AUDIT_SAMPLES, seed: int = 0) -> tuple[np.ndarray, float]:
    """Sample the ball of radius ``R_max`` and return the worst sample and its nearest distance.

    Half the samples are uniform for Lebesgue measure and half for the
    invariant measure, so both the interior and the rim are exercised.
    """
    rng = np.random.default_rng([seed, 0xC0FE])
    n = lattice.n
    g = rng.standard_normal((samples, n))
    dirs = g / np.linalg.norm(g, axis=1)[:, None]
    half = samples // 2
    rad = np.empty(samples)
    rad[:half] = lattice.R_max * rng.random(half) ** (1.0 / n)
    rad[half:] = _RadialSampler(n, lattice.R_max)(rng.random(samples - half))
    pts = rad[:, None] * dirs
    near = lattice.nearest_rho(pts)
    i = int(np.argmax(near))
    return pts[i], float(near[i])


class Partition:
    """Disjoint sets ``E_m`` with ``E_{r/2}(a_m) ⊆ E_m ⊆ E_r(a_m)``.

    ``E_m`` consists of the points of ``E_r(a_m)`` that lie in no earlier
    ``E_k`` and in no half ball ``E_{r/2}(a_k)`` with ``k > m``.  Because the
    half balls are pairwise disjoint, the inductive rule reduces to: the index
    of the half ball containing ``x`` if there is one, otherwise the smallest
    ``m`` with ``rho(x, a_m) < r``.  :meth:`index_by_recursion` evaluates the
    inductive definition literally and serves as an oracle.
    """

    def __init__(self, lattice: Lattice):
        self.lattice = lattice
        self._measures: dict[float, tuple[np.ndarray, np.ndarray]] = {}
        self._neighbor_cache: dict[int, np.ndarray] = {}

    def index(self, x) -> np.ndarray:
        """Partition index of each row of ``x``.

        Raises
        ------
        CoverageError
            If a point lies in no ``E_r(a_m)``.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty(len(x), dtype=int)
        for i, nb in enumerate(self.lattice.neighbors(x)):
            if nb.size == 0:
                raise CoverageError(f"point {x[i].tolist()} is not covered by the lattice")
            out[i] = self._pick(x[i], nb)
        return out

    def _pick(self, x: np.ndarray, nb: np.ndarray) -> int:
        d = _rho_to(x, self.lattice.centers[nb])
        half = nb[d < self.lattice.r / 2]
        return int(half[0]) if half.size else int(nb.min())

    def index_by_recursion(self, x) -> int:
        """Literal evaluation of the inductive definition (memoized, all centers)."""
        x = np.asarray(x, dtype=float)
        d = _rho_to(x, self.lattice.centers)
        r = self.lattice.r
        in_half = d < r / 2
        later_half = np.cumsum(in_half[::-1])[::-1] - in_half  # half balls with index > m
        member: list[bool] = []
        for m in range(len(d)):
            member.append(bool(d[m] < r and not any(member) and later_half[m] == 0))
            if member[-1]:
                return m
        raise CoverageError("point is not covered by the lattice")

    def _cell_neighbors(self, m: int) -> np.ndarray:
        if m not in self._neighbor_cache:
            r = self.lattice.r
            reach = 2.0 * r / (1.0 + r * r)
            self._neighbor_cache[m] = self.lattice.neighbors(self.lattice.centers[m][None, :], reach)[0]
        return self._neighbor_cache[m]

    def _index_local(self, y: np.ndarray, nb: np.ndarray) -> np.ndarray:
        """Vectorized index for samples whose relevant centers are among ``nb``."""
        d = _rho_pairs(y, self.lattice.centers[nb])
        r = self.lattice.r
        big = np.iinfo(np.int64).max
        half = np.where(d < r / 2, nb[None, :], big).min(axis=1)
        first = np.where(d < r, nb[None, :], big).min(axis=1)
        return np.where(half < big, half, first)

    def measure(self, m: int, beta: float, rel_se: float = 0.01, batch: int = 8192,
                max_samples: int = 2_000_000) -> tuple[float, float]:
        """Monte Carlo ``nu_beta(E_m) = int_{E_m} (1 - |y|^2)^beta d nu(y)``.

        Samples are uniform in the Euclidean ball ``E_r(a_m)`` with a random
        stream keyed by ``(seed, m)``.  Returns ``(estimate, standard_error)``.

        Raises
        ------
        PrecisionError
            If the relative standard error stays above ``rel_se``.
        """
        if not beta > -1:
            raise InputError("beta must exceed -1")
        lat = self.lattice
        ball = pseudo_ball(lat.centers[m], lat.r)
        nb = self._cell_neighbors(m)
        rng = np.random.default_rng([lat.seed, m])
        vol = ball.radius ** lat.n
        s1 = s2 = 0.0
        count = 0
        while count < max_samples:
            g = rng.standard_normal((batch, lat.n))
            y = ball.center + ball.radius * (rng.random(batch) ** (1.0 / lat.n))[:, None] * g / np.linalg.norm(g, axis=1)[:, None]
            val = np.where(self._index_local(y, nb) == m, (1.0 - np.einsum("ij,ij->i", y, y)) ** beta, 0.0)
            s1 += val.sum()
            s2 += (val * val).sum()
            count += batch
            mean = s1 / count
            se = math.sqrt(max(s2 / count - mean * mean, 0.0) / count)
            if mean > 0 and se <= rel_se * mean:
                return vol * mean, vol * se
        raise PrecisionError(f"measure of cell {m} did not reach relative error {rel_se}")

    def measures(self, beta: float, rel_se: float = 0.01) -> tuple[np.ndarray, np.ndarray]:
        """Estimates and standard errors of ``nu_beta(E_m)`` for every ``m`` (cached)."""
        key = float(beta)
        if key not in self._measures:
            est = np.empty(len(self.lattice))
            err = np.empty(len(self.lattice))
            for m in range(len(self.lattice)):
                est[m], err[m] = self.measure(m, beta, rel_se)
            self._measures[key] = (est, err)
        return self._measures[key]
