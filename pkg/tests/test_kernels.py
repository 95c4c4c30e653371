import mpmath
import numpy as np
import pytest

from conftest import random_ball
from hyperbloch.errors import DomainError, InputError, TruncationError
from hyperbloch.kernels import (KernelTable, kernel_eval, kernel_gradient, kernel_matrix, kernel_table, poisson_eval,
                                poisson_series, truncation_order)
from hyperbloch.quadrature import ball_rule, cm_coefficients, integrate_ball
from hyperbloch.specialfn import zonal


def mp_kernel(n, alpha, x, y, M):
    """Partial sum of the kernel series with mpmath radial factors and the package's c_m."""
    d = mpmath.mpf(n) / 2
    rx, ry = np.linalg.norm(x), np.linalg.norm(y)
    coef = cm_coefficients(n, alpha, M)
    total = mpmath.mpf(0)
    for m in range(M + 1):
        norm = mpmath.hyp2f1(m, 1 - d, m + d, 1)
        sx = mpmath.hyp2f1(m, 1 - d, m + d, rx * rx) / norm
        sy = mpmath.hyp2f1(m, 1 - d, m + d, ry * ry) / norm
        total += coef[m] * sx * sy * float(zonal(n, m, x, y))
    return float(total)


class TestKernel:
    def test_against_mpmath_series(self):
        n, alpha = 3, 0.5
        x = np.array([0.3, -0.2, 0.4])
        y = np.array([0.5, 0.1, -0.3])
        np.testing.assert_allclose(kernel_eval(kernel_table(n, alpha), x, y), mp_kernel(n, alpha, x, y, 60),
                                   rtol=1e-11)

    @pytest.mark.parametrize("n,alpha", [(2, 0.0), (3, 0.0), (4, 1.0)])
    def test_value_at_origin(self, rng, n, alpha):
        table = kernel_table(n, alpha)
        x = random_ball(rng, 10, n, 0.99)
        np.testing.assert_allclose(kernel_eval(table, x, np.zeros(n)), table.coefficients[0], rtol=1e-14)

    def test_symmetry(self, rng):
        table = kernel_table(3, 0.0)
        x = random_ball(rng, 30, 3, 0.9)
        y = random_ball(rng, 30, 3, 0.9)
        np.testing.assert_allclose(kernel_eval(table, x, y), kernel_eval(table, y, x), rtol=1e-13)

    @pytest.mark.parametrize("n,alpha", [(3, 0.0), (4, 1.0)])
    def test_reproduces_harmonic_functions(self, n, alpha):
        # f(y) = S_3(|y|) Z_3(y, eta) is hyperbolic harmonic and weighted-integrable
        table = kernel_table(n, alpha)
        eta = np.eye(n)[1]
        f = lambda y: table_free_term(n, y, eta)
        x = np.full(n, 0.1)
        rule = ball_rule(n, alpha, 48, 36)
        val = integrate_ball(lambda y: kernel_eval(table, x, y, tol=1e-12) * f(y), alpha, rule)
        np.testing.assert_allclose(val, f(x), rtol=1e-9)

    def test_gradient_against_finite_differences(self, rng):
        table = kernel_table(3, 0.0)
        x = random_ball(rng, 5, 3, 0.8)
        y = random_ball(rng, 5, 3, 0.8)
        h = 1e-6
        fd = np.stack([(kernel_eval(table, x + h * e, y) - kernel_eval(table, x - h * e, y)) / (2 * h)
                       for e in np.eye(3)], -1)
        np.testing.assert_allclose(kernel_gradient(table, x, y), fd, rtol=1e-6, atol=1e-7)

    def test_matrix_matches_pointwise(self, rng):
        table = kernel_table(3, 1.0)
        x = random_ball(rng, 40, 3, 0.9)
        y = random_ball(rng, 25, 3, 0.9)
        K = kernel_matrix(table, x, y, tol=1e-12)
        ref = kernel_eval(table, x[:, None, :], y[None, :, :], tol=1e-12)
        np.testing.assert_allclose(K, ref, rtol=1e-10, atol=1e-10 * np.abs(ref).max())
        S = kernel_matrix(table, x, x, tol=1e-12)
        np.testing.assert_array_equal(S, S.T)

    def test_truncation_limits(self):
        table = KernelTable(3, 0.0, M_max=50)
        with pytest.raises(TruncationError) as err:
            table.order_for(0.98, 1e-12)
        assert err.value.needed_order > 50
        with pytest.raises(DomainError):
            table.order_for(0.9995, 1e-6)
        with pytest.raises(InputError):
            table.order_for(0.5, 1e-14)

    def test_tail_bound_dominates_actual_tail(self):
        table = kernel_table(3, 0.0, 600)
        x = np.array([0.9, 0.0, 0.0])
        y = np.array([0.0, 0.95, 0.0])
        full = kernel_eval(table, x, y, M=600)
        for M in (20, 60, 120):
            q = np.linalg.norm(x) * np.linalg.norm(y)
            assert abs(full - kernel_eval(table, x, y, M=M)) <= table.tail_bound(M, q)

    def test_truncation_order_is_minimal(self):
        C, p, q, tol = 2.0, 1.5, 0.8, 1e-8
        M = truncation_order(C, p, q, tol)
        tail = lambda k: sum(C * m ** p * q ** m for m in range(k + 1, k + 2000))
        assert tail(M) <= tol < tail(M - 1)


def table_free_term(n, y, eta):
    from hyperbloch.specialfn import s_table
    y = np.asarray(y, dtype=float)
    r = np.linalg.norm(y, axis=-1)
    s = s_table(n, 3, np.ravel(r))[3].reshape(r.shape)
    return s * zonal(n, 3, y, eta)


class TestPoisson:
    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_series_matches_closed_form(self, rng, n):
        zeta = np.eye(n)[0]
        x = random_ball(rng, 50, n, 0.95)
        np.testing.assert_allclose(poisson_series(x, zeta, tol=1e-12), poisson_eval(x, zeta), rtol=1e-10, atol=1e-12)

    def test_closed_form(self):
        x = np.array([0.3, 0.4, 0.0])
        zeta = np.array([0.0, 0.0, 1.0])
        expect = (1 - 0.25) ** 2 / np.linalg.norm(x - zeta) ** 4
        np.testing.assert_allclose(poisson_eval(x, zeta), expect, rtol=1e-14)

    def test_mean_over_sphere_is_one(self):
        from hyperbloch.quadrature import integrate_sphere, sphere_rule
        x = np.array([0.5, 0.1, 0.2])
        val = integrate_sphere(lambda z: poisson_eval(x, z), sphere_rule(3, 80))
        np.testing.assert_allclose(val, 1.0, rtol=1e-10)

    def test_series_domain(self):
        with pytest.raises(DomainError):
            poisson_series([0.9995, 0.0], [1.0, 0.0])
