import mpmath
import numpy as np
import pytest

from conftest import random_ball
from hyperbloch.errors import ConfigurationError, InputError
from hyperbloch.kernels import kernel_eval, kernel_table, poisson_eval
from hyperbloch.operators import (BlochGrid, SampledFunction, ZonalExpansion, bergman_poly_constant,
                                  bergman_project, bloch_norms, dts_integral, dts_multipliers, dts_series, evaluate,
                                  gradient, pairing, truncated_pairing, unbounded_bloch_example)
from hyperbloch.quadrature import ball_rule, cm_coefficients
from hyperbloch.specialfn import s_table, zonal


def direct_sum(f, x):
    r = np.linalg.norm(x, axis=-1)
    S = s_table(f.n, f.degree, np.atleast_1d(r))
    return sum(f.weights[j, m] * S[m] * zonal(f.n, m, x, f.poles[j])
               for j in range(len(f.poles)) for m in range(f.degree + 1))


@pytest.fixture
def expansion(rng):
    n = 3
    poles = rng.standard_normal((3, n))
    poles /= np.linalg.norm(poles, axis=1, keepdims=True)
    return ZonalExpansion(n, poles, rng.standard_normal((3, 9)))


class TestZonalExpansion:
    def test_evaluate_matches_direct_sum(self, rng, expansion):
        x = random_ball(rng, 25, 3, 0.95)
        np.testing.assert_allclose(evaluate(expansion, x), direct_sum(expansion, x), rtol=1e-12, atol=1e-12)

    def test_gradient_against_finite_differences(self, rng, expansion):
        x = random_ball(rng, 10, 3, 0.9)
        h = 1e-6
        fd = np.stack([(expansion(x + h * e) - expansion(x - h * e)) / (2 * h) for e in np.eye(3)], -1)
        np.testing.assert_allclose(gradient(expansion, x), fd, rtol=1e-6, atol=1e-6)

    def test_algebra(self, rng, expansion):
        x = random_ball(rng, 10, 3, 0.9)
        other = ZonalExpansion.poisson([0.0, 0.0, 1.0], 12)
        np.testing.assert_allclose((expansion - other)(x), expansion(x) - other(x), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(expansion.scale(2.5)(x), 2.5 * expansion(x), rtol=1e-14)

    def test_from_terms_merges_poles(self):
        f = ZonalExpansion.from_terms(3, [(1, [(1.0, [0, 0, 2]), (2.0, [0, 0, 1])]), (0, [(3.0, [1, 0, 0])])])
        assert f.poles.shape == (2, 3)
        s1 = s_table(3, 1, [0.5])[1, 0]
        np.testing.assert_allclose(f(np.array([0.0, 0.0, 0.5])), 3.0 * s1 * 3 * 0.5 + 3.0, rtol=1e-14)

    def test_poisson_partial_sums_converge(self, rng):
        zeta = np.array([0.6, 0.0, 0.8])
        x = random_ball(rng, 20, 3, 0.6)
        np.testing.assert_allclose(ZonalExpansion.poisson(zeta, 80)(x), poisson_eval(x, zeta), rtol=1e-12)

    def test_kernel_slice(self, rng):
        table = kernel_table(3, 1.0)
        y = np.array([0.1, 0.5, -0.2])
        x = random_ball(rng, 15, 3, 0.95)
        np.testing.assert_allclose(ZonalExpansion.kernel_slice(table, y)(x), kernel_eval(table, x, y), rtol=1e-10)

    def test_validation(self):
        with pytest.raises(InputError):
            ZonalExpansion(3, [[1.0, 1.0, 0.0]], [[1.0]])
        with pytest.raises(InputError):
            ZonalExpansion(3, [[1.0, 0.0, 0.0]], [[np.inf]])
        with pytest.raises(InputError):
            ZonalExpansion.constant(3, 1.0)([1.0, 0.0, 0.0])


class TestFractionalDerivative:
    def test_multipliers(self):
        np.testing.assert_allclose(dts_multipliers(3, 0.0, 1.5, 10),
                                   cm_coefficients(3, 1.5, 10) / cm_coefficients(3, 0.0, 10), rtol=1e-15)

    def test_inverse(self, rng, expansion):
        x = random_ball(rng, 10, 3, 0.9)
        back = dts_series(dts_series(expansion, 0.5, 2.0), 2.5, -2.0)
        np.testing.assert_allclose(back(x), expansion(x), rtol=1e-12, atol=1e-12)

    def test_integral_matches_series(self):
        f = ZonalExpansion.from_terms(3, [(2, [(1.0, [0, 1, 0])]), (5, [(-0.5, [1, 1, 0])])])
        x = np.array([[0.2, 0.3, 0.1], [0.0, 0.6, 0.0]])
        rule = ball_rule(3, 0.0, 64, 48)
        np.testing.assert_allclose(dts_integral(f, 0.0, 1.0, x, rule=rule), dts_series(f, 0.0, 1.0)(x), rtol=1e-7)

    def test_derivative_of_kernel_is_shifted_kernel(self, rng):
        # D^t_alpha R_alpha(., y) = R_{alpha + t}(., y)
        y = np.array([0.4, 0.0, 0.3])
        x = random_ball(rng, 10, 3, 0.9)
        d = dts_series(ZonalExpansion.kernel_slice(kernel_table(3, 0.0), y), 0.0, 2.0)
        np.testing.assert_allclose(d(x), kernel_eval(kernel_table(3, 2.0), x, y), rtol=1e-10)

    def test_rule_mismatch(self):
        rule = ball_rule(3, 1.0, 8, 4)
        sf = SampledFunction.from_function(rule, lambda p: np.ones(p.shape[:-1]))
        with pytest.raises(ConfigurationError):
            dts_integral(sf, 0.0, 1.0, np.zeros(3))
        with pytest.raises(InputError):
            dts_series(ZonalExpansion.constant(3, 1.0), -1.0, 0.5)


class TestProjection:
    def test_projection_reproduces_harmonic(self):
        f = ZonalExpansion.from_terms(3, [(3, [(1.0, [0, 0, 1])])])
        rule = ball_rule(3, 0.5, 48, 40)
        x = np.array([0.15, -0.1, 0.1])
        val = bergman_project(SampledFunction.from_function(rule, f), 0.5, x)
        np.testing.assert_allclose(val, f(x), rtol=1e-9)

    @pytest.mark.parametrize("j,k,alpha", [(0, 2, 0.0), (2, 1, 0.0), (3, 4, 1.5)])
    def test_monomial_constant_n4(self, j, k, alpha):
        # in dimension 4, S_j(r) = ((j + 2) - j r^2) / 2 is a polynomial
        n = 4
        c = cm_coefficients(n, alpha, j)[j]
        s = lambda r: ((j + 2) - j * r * r) / 2
        ref = c * mpmath.quad(lambda r: n * r ** (n - 1) * s(r) * r ** (k + 2 * j) * (1 - r * r) ** alpha, [0, 1])
        np.testing.assert_allclose(bergman_poly_constant(n, alpha, j, k), float(ref), rtol=1e-12)

    def test_monomial_constant_n3_mpmath(self):
        n, j, k, alpha = 3, 2, 3, 0.0
        d = mpmath.mpf(n) / 2
        norm = mpmath.hyp2f1(j, 1 - d, j + d, 1)
        s = lambda r: mpmath.hyp2f1(j, 1 - d, j + d, r * r) / norm
        ref = cm_coefficients(n, alpha, j)[j] * mpmath.quad(
            lambda r: n * r ** (n - 1) * s(r) * r ** (k + 2 * j), [0, 1])
        np.testing.assert_allclose(bergman_poly_constant(n, alpha, j, k), float(ref), rtol=1e-11)


class TestBlochNorms:
    def test_grid_radii(self):
        r = BlochGrid(per_octave=2, linear=5, r_max=0.7).radii()
        assert r[0] == 0.0 and r[-1] == 0.7 and np.all(np.diff(r) > 0)
        assert BlochGrid(r_max=0.999).radii()[-1] == 0.999

    def test_constant_has_zero_seminorm(self):
        rep = bloch_norms(ZonalExpansion.constant(3, -2.0), grid=BlochGrid(r_max=0.9))
        assert rep.seminorm == 0.0
        assert rep.norm == 2.0

    def test_linear_function(self):
        # f(x) = S_1(|x|) Z_1(x, e) has gradient of size about n at the origin
        f = ZonalExpansion.from_terms(2, [(1, [(1.0, [1, 0])])])
        rep = bloch_norms(f, grid=BlochGrid(r_max=0.99))
        np.testing.assert_allclose(rep.seminorm, 2.0, rtol=1e-12)

    def test_unbounded_example_grows(self):
        # logarithmic growth: equal increments per decade of 1 - |x|
        f = unbounded_bloch_example(3, 2000)
        e1 = np.eye(3)[0]
        vals = [float(f(t * e1)) for t in (0.9, 0.99, 0.999)]
        assert vals[0] < vals[1] < vals[2]
        assert 0.5 < (vals[2] - vals[1]) / (vals[1] - vals[0]) < 2.0


class TestPairing:
    def test_reproduces_value(self):
        # <R_alpha(., y), g>  with the (1-|x|^2)^t D^t weight recovers g(y)
        g = ZonalExpansion.from_terms(3, [(1, [(1.0, [1, 0, 0])]), (2, [(0.3, [0, 1, 0])])])
        y = np.array([0.2, 0.1, -0.3])
        table = kernel_table(3, 0.0)
        f = lambda p: kernel_eval(table, p, y)
        rule = ball_rule(3, 1.0, 48, 32)
        np.testing.assert_allclose(pairing(f, g, 0.0, 1.0, rule), g(y), rtol=1e-9)

    def test_t_independent(self):
        f = ZonalExpansion.from_terms(3, [(2, [(1.0, [0, 0, 1])])])
        g = ZonalExpansion.from_terms(3, [(2, [(2.0, [0, 1, 1])])])
        a = pairing(f, g, 0.0, 1.0, ball_rule(3, 1.0, 32, 16))
        b = pairing(f, g, 0.0, 2.5, ball_rule(3, 2.5, 32, 16))
        np.testing.assert_allclose(a, b, rtol=1e-9)

    def test_truncated_pairing_orthogonality(self):
        f = ZonalExpansion.from_terms(3, [(1, [(1.0, [1, 0, 0])])])
        g = ZonalExpansion.from_terms(3, [(2, [(1.0, [1, 0, 0])])])
        assert abs(truncated_pairing(f, g, 0.0, 0.9, 32, 16)) < 1e-14
