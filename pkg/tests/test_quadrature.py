import mpmath
import numpy as np
import pytest

from hyperbloch.errors import ConfigurationError, EvaluationError, InputError
from hyperbloch.quadrature import (ball_rule, c0_closed_form, cm_coefficient, cm_coefficients, integrate_ball,
                                   integrate_sphere, radial_rule, sphere_rule, truncated_radial_rule)


def mp_inverse_cm(n, m, alpha):
    """``1 / c_m`` by adaptive mpmath quadrature of the defining integral."""
    d = mpmath.mpf(n) / 2
    norm = mpmath.hyp2f1(m, 1 - d, m + d, 1)

    def integrand(r):
        s = mpmath.hyp2f1(m, 1 - d, m + d, r * r) / norm
        return n * r ** (2 * m + n - 1) * s * s * (1 - r * r) ** alpha

    return mpmath.quad(integrand, [0, 0.5, 0.9, 1])


class TestSphereRule:
    @pytest.mark.parametrize("n", [2, 3, 4, 6])
    def test_weights_sum_to_one(self, n):
        np.testing.assert_allclose(sphere_rule(n, 12).weights.sum(), 1.0, rtol=1e-14)

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_nodes_on_sphere(self, n):
        np.testing.assert_allclose(np.linalg.norm(sphere_rule(n, 10).nodes, axis=1), 1.0, rtol=1e-14)

    @pytest.mark.parametrize("n", [3, 4])
    def test_even_moments(self, n):
        # int zeta_1^2 d sigma = 1/n and int zeta_1^4 d sigma = 3/(n(n+2))
        rule = sphere_rule(n, 8)
        np.testing.assert_allclose(integrate_sphere(lambda z: z[..., 0] ** 2, rule), 1 / n, rtol=1e-13)
        np.testing.assert_allclose(integrate_sphere(lambda z: z[..., 0] ** 4, rule), 3 / (n * (n + 2)), rtol=1e-13)

    def test_odd_polynomials_vanish(self):
        rule = sphere_rule(3, 9)
        np.testing.assert_allclose(integrate_sphere(lambda z: z[..., 0] * z[..., 1] ** 2 * z[..., 2] ** 4, rule),
                                   0.0, atol=1e-15)

    def test_nonfinite_integrand(self):
        with pytest.raises(EvaluationError):
            integrate_sphere(lambda z: np.full(z.shape[:-1], np.nan), sphere_rule(3, 4))


class TestBallRule:
    @pytest.mark.parametrize("n,alpha", [(2, 0.0), (3, 0.0), (3, 1.5), (5, -0.5)])
    def test_weighted_mass(self, n, alpha):
        rule = ball_rule(n, alpha, 32, 4)
        mass = integrate_ball(lambda x: np.ones(x.shape[:-1]), alpha, rule)
        np.testing.assert_allclose(mass, 1.0 / c0_closed_form(n, alpha), rtol=1e-13)

    def test_radial_moment(self):
        # int |x|^2 d nu = n / (n + 2)
        n = 4
        val = integrate_ball(lambda x: np.sum(x * x, axis=-1), 0.0, ball_rule(n, 0.0, 16, 4))
        np.testing.assert_allclose(val, n / (n + 2), rtol=1e-14)

    def test_alpha_mismatch(self):
        with pytest.raises(ConfigurationError):
            integrate_ball(lambda x: x[..., 0], 1.0, ball_rule(3, 0.0, 8, 4))

    def test_truncated_radial_rule(self):
        # int_{|x|<R} d nu = R^n
        rule = truncated_radial_rule(3, 0.0, 0.6, 16)
        np.testing.assert_allclose(rule.weights.sum(), 0.6 ** 3, rtol=1e-13)
        assert rule.nodes.max() < 0.6

    def test_invalid(self):
        with pytest.raises(InputError):
            radial_rule(3, -1.0)
        with pytest.raises(InputError):
            truncated_radial_rule(3, 0.0, 1.0)
        with pytest.raises(InputError):
            sphere_rule(1, 4)


class TestCoefficients:
    @pytest.mark.parametrize("n,alpha", [(2, 0.0), (3, 0.0), (3, 1.0), (4, 0.5), (6, 0.0)])
    def test_c0_closed_form(self, n, alpha):
        np.testing.assert_allclose(cm_coefficient(n, 0, alpha), c0_closed_form(n, alpha), rtol=1e-12)

    @pytest.mark.parametrize("alpha", [0.0, 2.0])
    def test_dimension_two(self, alpha):
        # S_m = 1, so 1/c_m = B(m + 1, alpha + 1)
        m = np.arange(60)
        ref = [1.0 / float(mpmath.beta(k + 1, alpha + 1)) for k in m]
        np.testing.assert_allclose(cm_coefficients(2, alpha, 59), ref, rtol=1e-10)

    @pytest.mark.parametrize("n,alpha", [(3, 0.0), (4, 0.0), (5, 1.0)])
    def test_against_mpmath(self, n, alpha):
        coef = cm_coefficients(n, alpha, 40)
        for m in (1, 7, 40):
            np.testing.assert_allclose(coef[m], 1.0 / float(mp_inverse_cm(n, m, alpha)), rtol=1e-9)

    def test_growth_rate(self):
        # c_m grows like m^(alpha + 1)
        coef = cm_coefficients(3, 0.0, 800)
        ratio = coef[800] / coef[400]
        np.testing.assert_allclose(ratio, 2.0, rtol=0.01)

    def test_prefix_consistency(self):
        long = cm_coefficients(3, 0.25, 200)
        np.testing.assert_array_equal(cm_coefficients(3, 0.25, 20), long[:21])
