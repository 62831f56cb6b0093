import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sp_integrate
from scipy.stats import norm

from poisson_stein import SteinFunction, stein_residual, stein_solution
from poisson_stein.stein import SUP_BOUND, increment_margin, stein_derivative

THRESHOLDS = [-2.0, -0.5, 0.0, 0.5, 2.0]


def quad_solution(x, w):
    """The defining integral by quadrature; above ``x`` it is rewritten as a tail integral."""
    gauss = lambda y: math.exp(-y * y / 2)
    if w <= x:
        return (1 - norm.cdf(x)) * math.exp(w * w / 2) * sp_integrate.quad(gauss, -np.inf, w)[0]
    return norm.cdf(x) * math.exp(w * w / 2) * sp_integrate.quad(gauss, w, np.inf)[0]


class TestSolution:
    def test_peak_value(self):
        assert stein_solution(SteinFunction(0.0), 0.0) == pytest.approx(SUP_BOUND, rel=1e-15)
        assert SUP_BOUND == pytest.approx(0.626657, abs=1e-6)

    @pytest.mark.parametrize("x", THRESHOLDS)
    @pytest.mark.parametrize("w", [-3.0, -0.7, 0.0, 0.4, 1.9, 3.5])
    def test_matches_defining_integral(self, x, w):
        assert stein_solution(SteinFunction(x), w) == pytest.approx(quad_solution(x, w), rel=1e-8, abs=1e-12)

    def test_left_tail(self):
        # f_x(w) ~ (1 - Phi(x)) / |w| as w -> -inf, so f_0(-10) is about 0.05
        s = SteinFunction(0.0)
        w = np.array([-10.0, -100.0, -1000.0])
        assert stein_solution(s, w) * np.abs(w) == pytest.approx(0.5, rel=1e-2)
        assert np.all(np.diff(stein_solution(s, np.linspace(-50, -1, 200))) > 0)

    def test_no_overflow_far_out(self):
        vals = stein_solution(SteinFunction(0.5), np.array([-1e6, -40.0, 40.0, 1e6]))
        assert np.all(np.isfinite(vals)) and np.all(vals > 0)

    def test_rejects_infinite_threshold(self):
        with pytest.raises(ValueError):
            SteinFunction(math.inf)


class TestDerivativeAndResidual:
    def test_residual_example(self):
        assert abs(stein_residual(SteinFunction(0.0), 1.0)) < 1e-9

    def test_one_sided_at_threshold(self):
        s = SteinFunction(2.0)
        assert stein_derivative(s, 2.0) == pytest.approx(1 - norm.cdf(2.0) + 2.0 * stein_solution(s, 2.0))
        assert abs(stein_residual(s, 2.0)) < 1e-9

    @pytest.mark.parametrize("x", THRESHOLDS)
    def test_derivative_matches_finite_difference(self, x):
        s = SteinFunction(x)
        w = np.linspace(-6, 6, 241)
        w = w[np.abs(w - x) > 1e-3]
        h = 1e-6
        fd = (stein_solution(s, w + h) - stein_solution(s, w - h)) / (2 * h)
        assert stein_derivative(s, w) == pytest.approx(fd, abs=1e-7)

    @settings(max_examples=200, deadline=None)
    @given(x=st.floats(-4, 4), w=st.floats(-30, 30))
    def test_bounds_and_residual(self, x, w):
        s = SteinFunction(x)
        f = stein_solution(s, w)
        assert 0 < f <= SUP_BOUND + 1e-10
        assert abs(stein_derivative(s, w)) <= 1 + 1e-10
        assert abs(stein_residual(s, w)) < 1e-8

    @settings(max_examples=200, deadline=None)
    @given(x=st.floats(-3, 3), w=st.floats(-8, 8), u=st.floats(-3, 3), v=st.floats(-3, 3))
    def test_increment_inequality(self, x, w, u, v):
        assert increment_margin(SteinFunction(x), w, u, v) >= -1e-12
