import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sp_integrate

from poisson_stein import (ContractionIndex, ContractionIndexError, ControlMeasure, IntegrationSpec, Kernel,
                           contract, contraction_norm, cosine_family, symmetrize)
from poisson_stein.scenarios import cosine_spec

UNIT = ControlMeasure.uniform([0.0], [1.0], 1.0)
SPEC = IntegrationSpec(nodes=24)


def gauss_kernel(a=2.0):
    return Kernel(2, lambda x, y: np.exp(-a * (x[..., 0] - y[..., 0]) ** 2))


class TestContract:
    def test_full_identification_is_square(self):
        f = gauss_kernel()
        sq = contract(f, f, (2, 0), UNIT)
        x, y = np.random.default_rng(0).random((2, 10, 1))
        assert sq(x, y) == pytest.approx(f(x, y) ** 2, rel=1e-15)

    def test_tensor_product(self):
        f1 = Kernel(1, lambda x: np.sin(x[..., 0]))
        f2 = gauss_kernel()
        t = contract(f1, f2, (0, 0), UNIT)
        x, y, z = np.random.default_rng(1).random((3, 10, 1))
        assert t.arity == 3
        assert t(x, y, z) == pytest.approx(f1(x) * f2(y, z), rel=1e-15)

    def test_one_one_against_quad(self):
        f = gauss_kernel()
        c = contract(f, f, (1, 1), UNIT.with_intensity(3.0), SPEC)
        ref = 3.0 * sp_integrate.quad(lambda y: math.exp(-2 * (y - 0.2) ** 2 - 2 * (y - 0.7) ** 2), 0, 1)[0]
        assert float(c(np.array([0.2]), np.array([0.7]))) == pytest.approx(ref, rel=1e-12)

    def test_argument_order_shared_first(self):
        f = Kernel(2, lambda x, y: x[..., 0] + 2 * y[..., 0])
        c = contract(f, f, (2, 1), UNIT, SPEC)
        # int f(y, g) f(y, g) dy with g shared
        g = 0.3
        ref = sp_integrate.quad(lambda y: (y + 2 * g) ** 2, 0, 1)[0]
        assert float(c(np.array([g]))) == pytest.approx(ref, rel=1e-12)

    @pytest.mark.parametrize("idx", [(3, 0), (1, 2), (-1, -1)])
    def test_bad_index(self, idx):
        with pytest.raises(ContractionIndexError):
            contract(gauss_kernel(), gauss_kernel(), idx, UNIT)

    @pytest.mark.parametrize("r, l, arity", [(1, 0, 3), (1, 1, 2), (2, 1, 1), (2, 2, 0)])
    def test_arity(self, r, l, arity):
        assert ContractionIndex(r, l).arity(2, 2) == arity
        assert contract(gauss_kernel(), gauss_kernel(), (r, l), UNIT).arity == arity

    @settings(max_examples=20, deadline=None)
    @given(a=st.floats(-3, 3), b=st.floats(-3, 3))
    def test_bilinear(self, a, b):
        f, g = gauss_kernel(1.0), gauss_kernel(3.0)
        h = Kernel(2, lambda x, y: x[..., 0] * y[..., 0])
        combo = f.scaled(a) + g.scaled(b)
        x, y = np.array([[0.3], [0.8]]), np.array([[0.6], [0.1]])
        lhs = contract(combo, h, (1, 1), UNIT, SPEC)(x, y)
        rhs = a * contract(f, h, (1, 1), UNIT, SPEC)(x, y) + b * contract(g, h, (1, 1), UNIT, SPEC)(x, y)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)


class TestSymmetrize:
    def test_symmetric_unchanged(self):
        f = gauss_kernel()
        assert symmetrize(f) is f

    def test_average_of_projection(self):
        f = Kernel(2, lambda x, y: x[..., 0], symmetric=False)
        s = symmetrize(f)
        x, y = np.random.default_rng(2).random((2, 8, 1))
        assert s(x, y) == pytest.approx((x[:, 0] + y[:, 0]) / 2)
        assert s.symmetric and not s.approximately_symmetric

    def test_large_arity_sampled(self):
        f = Kernel(7, lambda *xs: xs[0][..., 0], symmetric=False)
        s = symmetrize(f)
        assert s.approximately_symmetric
        pts = [np.full(1, float(i)) for i in range(7)]
        # each coordinate appears first in roughly 1/7 of the sampled permutations
        assert float(s(*pts)) == pytest.approx(3.0, abs=0.3)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_result_is_symmetric(self, seed):
        f = Kernel(3, lambda x, y, z: x[..., 0] * y[..., 0] ** 2 + np.sin(z[..., 0]), symmetric=False)
        s = symmetrize(f)
        x, y, z = np.random.default_rng(seed).random((3, 4, 1))
        assert s(x, y, z) == pytest.approx(s(z, x, y), rel=1e-13)


class TestContractionNorm:
    def test_zero_kernel(self):
        zero = Kernel(2, lambda x, y: 0.0 * x[..., 0] * y[..., 0])
        assert contraction_norm(zero, zero, (1, 1), UNIT) == 0.0

    @pytest.mark.parametrize("m", [1, 4, 8])
    def test_cosine_family_one_one(self, m):
        # f *_1^1 f = m^{-1} sum_j phi_j (x) phi_j, whose norm is m^{-1/2}
        f = cosine_family(m)
        assert contraction_norm(f, f, (1, 1), UNIT, cosine_spec(m)) == pytest.approx(m ** -0.5, rel=1e-9)

    def test_full_contraction_is_squared_norm(self):
        f = gauss_kernel()
        full = contraction_norm(f, f, (2, 2), UNIT, SPEC)
        ref = sp_integrate.dblquad(lambda y, x: math.exp(-4 * (x - y) ** 2), 0, 1, 0, 1)[0]
        assert full == pytest.approx(ref, rel=1e-10)

    def test_two_one_against_quad(self):
        f = gauss_kernel()
        got = contraction_norm(f, f, (2, 1), UNIT, SPEC)
        inner = lambda g: sp_integrate.quad(lambda y: math.exp(-4 * (y - g) ** 2), 0, 1)[0]
        ref = math.sqrt(sp_integrate.quad(lambda g: inner(g) ** 2, 0, 1)[0])
        assert got == pytest.approx(ref, rel=1e-9)

    def test_scales_with_intensity(self):
        # ||f *_1^1 f|| in L^2(mu_n^2) scales like n^2 for fixed f
        f = gauss_kernel()
        a = contraction_norm(f, f, (1, 1), UNIT, SPEC)
        b = contraction_norm(f, f, (1, 1), UNIT.with_intensity(3.0), SPEC)
        assert b == pytest.approx(9.0 * a, rel=1e-12)
