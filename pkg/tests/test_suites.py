import numpy as np
import pytest

from hyperbloch.errors import InputError
from hyperbloch.kernels import poisson_eval
from hyperbloch.suites import SUITES, SuiteConfig, hyperbolic_laplacian, odd_dim_fit_residuals, run_suite


class TestLaplacian:
    def test_quadratic(self):
        # f = |x|^2: Lap f = 2n, grad f = 2x, so Delta_h f = (1-|x|^2)^2 2n + 4(n-2)(1-|x|^2)|x|^2
        n = 3
        x = np.array([0.2, -0.1, 0.3])
        w = 1 - x @ x
        expect = w * w * 2 * n + 4 * (n - 2) * w * (x @ x)
        got = hyperbolic_laplacian(lambda p: np.sum(p * p, axis=-1), x)
        np.testing.assert_allclose(got, expect, rtol=1e-9)

    def test_poisson_kernel_is_harmonic(self):
        zeta = np.array([0.0, 1.0, 0.0, 0.0])
        x = np.array([0.1, 0.4, -0.2, 0.1])
        f = lambda p: poisson_eval(p, zeta)
        coarse = abs(hyperbolic_laplacian(f, x, 1e-2))
        fine = abs(hyperbolic_laplacian(f, x, 5e-3))
        assert fine < 1e-6 * f(x)
        # fourth-order stencil: halving h divides the error by about 16
        assert 10 < coarse / fine < 22

    def test_stencil_inside_ball(self):
        with pytest.raises(InputError):
            hyperbolic_laplacian(lambda p: p[..., 0], np.array([0.999, 0.0]), h=1e-2)


class TestOddDimensionFit:
    def test_even_dimension_is_quadratic(self):
        res = odd_dim_fit_residuals(4, 3)
        assert res[2] < 1e-12 and res[1] > 1e-3

    def test_odd_dimension_decreases_slowly(self):
        res = odd_dim_fit_residuals(3, 30)
        assert np.all(res > 1e-8)
        assert res[30] < res[5]


class TestRunSuite:
    def test_unknown_suite(self):
        with pytest.raises(InputError):
            run_suite("nope")

    def test_config_validation(self):
        with pytest.raises(InputError):
            SuiteConfig(grid="huge")
        with pytest.raises(InputError):
            SuiteConfig(tol={"x": -1.0})

    def test_tolerance_override(self):
        rep = run_suite("odd-dim-witness", SuiteConfig(tol={"odd_fit_residual": 1e-7}))
        (odd,) = [c for c in rep.checks if c.name == "odd_fit_residual"]
        assert odd.threshold == 1e-7 and odd.passed

    def test_names(self):
        assert len(SUITES) == 10 and len(set(SUITES)) == 10
