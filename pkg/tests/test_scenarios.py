import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sp_integrate

from poisson_stein import (ChaosExpansion, DomainError, IntegrationSpec, LevyNu, PointConfiguration,
                           build_dejong_cosine, build_ou_levy, build_pairwise, chaos_variance,
                           evaluate_multiple_integral, indicator_distance, run_rate_study, simulate, ustat_evaluate,
                           ustat_mean)
from poisson_stein.point_process import sample_batch
from poisson_stein.scenarios import (SCENARIO_BUILDERS, _pair_counts_1d, _pair_counts_kdtree, disk_square_area,
                                     ou_path_integrals, ou_variance, pairwise_closed_form)


class TestDeJongCosine:
    @pytest.mark.parametrize("n, m", [(16, 1), (64, 8)])
    def test_normalisation(self, n, m):
        sc = build_dejong_cosine(n, m)
        assert sc.normalization.sd == pytest.approx(math.sqrt(2.0) * n, rel=1e-10)
        assert chaos_variance(sc.expansion, sc.control, sc.spec) == pytest.approx(1.0, rel=1e-10)

    def test_consistency(self):
        res = build_dejong_cosine(32, 4).consistency(20_000, seed=1)
        assert abs(res["mean_z"]) < 4 and abs(res["var_z"]) < 4

    def test_sampler_matches_pathwise(self):
        sc = build_dejong_cosine(20, 3)
        rng = np.random.default_rng(0)
        batch = sample_batch(sc.control, 10, np.random.default_rng(0))
        raw = sc.raw_sampler(rng, 10)
        assert raw == pytest.approx([sc.functional(cfg) for cfg in batch], rel=1e-10, abs=1e-9)

    def test_rejects_bad_parameters(self):
        with pytest.raises(DomainError):
            build_dejong_cosine(16, 0)


class TestPairwise:
    @pytest.mark.parametrize("z, expected", [
        ((0.5, 0.5), math.pi * 0.01),
        ((0.0, 0.5), math.pi * 0.01 / 2),
        ((0.0, 0.0), math.pi * 0.01 / 4),
        ((1.0, 1.0), math.pi * 0.01 / 4),
    ])
    def test_disk_square_area_examples(self, z, expected):
        assert float(disk_square_area(np.array(z), 0.1)) == pytest.approx(expected, rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(x=st.floats(0, 1), y=st.floats(0, 1))
    def test_disk_square_area_against_quad(self, x, y):
        r = 0.15
        lo, hi = max(0.0, x - r), min(1.0, x + r)

        def chord(s):
            half = math.sqrt(max(r * r - (s - x) ** 2, 0.0))
            return max(0.0, min(1.0, y + half) - max(0.0, y - half))

        ref = sp_integrate.quad(chord, lo, hi, limit=200, epsabs=1e-13)[0]
        assert float(disk_square_area(np.array([x, y]), r)) == pytest.approx(ref, abs=1e-9)

    def test_closed_form_against_quadrature_d1(self):
        n, r = 50.0, 0.1
        sc = build_pairwise(n, r, 1)
        mean, var = pairwise_closed_form(n, r, 1)
        assert ustat_mean(indicator_distance(r), 2, sc.control, sc.spec) == pytest.approx(mean, rel=2e-3)
        raw = ChaosExpansion(0.0, [(q, f.scaled(sc.normalization.sd)) for q, f in sc.expansion.terms])
        assert chaos_variance(raw, sc.control, sc.spec) == pytest.approx(var, rel=5e-3)

    @pytest.mark.parametrize("d", [1, 2])
    def test_pair_counters_match_pathwise(self, d):
        sc = build_pairwise(40, 0.1, d)
        batch = sample_batch(sc.control, 15, np.random.default_rng(d))
        counter = _pair_counts_1d if d == 1 else _pair_counts_kdtree
        got = counter(batch.points, batch.owner, batch.reps, 0.1)
        assert got == pytest.approx([ustat_evaluate(indicator_distance(0.1), 2, c) for c in batch])

    @pytest.mark.parametrize("d, n", [(1, 64), (2, 64)])
    def test_consistency(self, d, n):
        res = build_pairwise(n, 0.1, d).consistency(20_000, seed=3)
        assert abs(res["mean_z"]) < 4 and abs(res["var_z"]) < 4

    def test_hoeffding_reconstruction(self):
        sc = build_pairwise(30, 0.1, 1)
        cfg = PointConfiguration(np.random.default_rng(2).random((40, 1)), sc.control)
        z = sc.normalize(ustat_evaluate(indicator_distance(0.1), 2, cfg))
        recon = sum(evaluate_multiple_integral(f, q, cfg, sc.control, sc.spec) for q, f in sc.expansion.terms)
        mean_q = ustat_mean(indicator_distance(0.1), 2, sc.control, sc.spec)
        # the expansion's constant is the quadrature mean, not the closed form
        assert recon + (mean_q - sc.normalization.mean) / sc.normalization.sd == pytest.approx(z, rel=1e-9)

    @pytest.mark.parametrize("kwargs", [{"r": 0.3}, {"d": 3}])
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(DomainError):
            build_pairwise(16, **kwargs)


class TestLevyNu:
    def test_default(self):
        nu = LevyNu.default()
        assert nu.symmetric and nu.c_nu == pytest.approx(9 / 5) and nu.moments[2] == pytest.approx(1.0)

    def test_skewed(self):
        nu = LevyNu.skewed()
        assert nu.mass == pytest.approx(1 / 3)
        assert nu.moments[1] == pytest.approx(0.5) and nu.moments[3] == pytest.approx(9 / 4)
        assert not nu.symmetric

    def test_density_route(self):
        nu = LevyNu(-1.0, 1.0, density=lambda u: 1.5 * np.ones_like(u))
        assert nu.mass == pytest.approx(3.0) and nu.moments[4] == pytest.approx(0.6)

    def test_normalisation_enforced(self):
        with pytest.raises(DomainError):
            LevyNu(-1.0, 1.0, density=lambda u: np.ones_like(u))


class TestOUVariance:
    @pytest.mark.parametrize("kind, expected", [("M", 2.0), ("S", 2.0 + 1.8)])
    def test_asymptotic(self, kind, expected):
        assert ou_variance(kind, 1.0, math.inf, 1.8, asymptotic=True) == pytest.approx(expected)

    @pytest.mark.parametrize("lam, T, h", [(1.0, 7.0, 0.0), (0.5, 20.0, 0.3), (2.0, 3.0, 1.5)])
    def test_finite_T_against_quad(self, lam, T, h):
        c = 1.8
        cov_s = lambda t: (2.0 + lam * c) * math.exp(-2 * lam * t)
        cov_v = lambda t: (math.exp(-2 * lam * t) + math.exp(-lam * (t + h) - lam * abs(t - h))
                           + lam * c * math.exp(-2 * lam * (t + h)))
        ramp = lambda cov: 2 * sp_integrate.quad(lambda t: (1 - t / T) * cov(t), 0, T, points=[h], limit=200)[0]
        assert ou_variance("M", lam, T, c) == pytest.approx(ramp(lambda t: math.exp(-lam * t)), rel=1e-10)
        assert ou_variance("S", lam, T, c) == pytest.approx(ramp(cov_s), rel=1e-10)
        assert ou_variance("V", lam, T, c, h) == pytest.approx(ramp(cov_v), rel=1e-9)

    def test_lag_zero_is_s(self):
        assert ou_variance("V", 1.3, 50.0, 2.0, 0.0) == ou_variance("S", 1.3, 50.0, 2.0)
        sc = build_ou_levy(T=30.0)
        assert sc["V"].normalization.sd == sc["S"].normalization.sd

    def test_converges_to_limit(self):
        for kind in ("M", "S", "V"):
            assert ou_variance(kind, 1.0, 1e7, 1.8, 0.4) == pytest.approx(
                ou_variance(kind, 1.0, math.inf, 1.8, 0.4, asymptotic=True), rel=1e-5)


class TestOUPaths:
    def brute(self, x, u, lam, T, B, a, h, grid=200_001):
        t = np.linspace(0.0, T + h, grid)
        y = a * np.exp(-lam * (t + B)) - a
        for xi, ui in zip(x, u):
            y += math.sqrt(2 * lam) * ui * np.where(t >= xi, np.exp(-lam * (t - xi)), 0.0)
        inside = t <= T + 1e-12
        step = t[1] - t[0]
        lag = int(round(h / step))
        y0, yh = y[inside], y[lag:lag + inside.sum()]
        return (sp_integrate.simpson(y0, x=t[inside]), sp_integrate.simpson(y0 ** 2, x=t[inside]),
                sp_integrate.simpson(y0 * yh, x=t[inside]))

    @pytest.mark.parametrize("h", [0.0, 0.5])
    def test_exact_integrals_against_simpson(self, h):
        rng = np.random.default_rng(4)
        lam, T, B, a = 1.0, 20.0, 10.0, 0.7
        x = rng.uniform(-B, T + h, 40)
        u = rng.uniform(-1.7, 1.7, 40)
        got = ou_path_integrals(x, u, lam, T, B, a, h)
        ref = self.brute(x, u, lam, T, B, a, h)
        for g, r in zip(got, ref):
            assert g == pytest.approx(r, rel=1e-4, abs=1e-4)

    def test_no_jumps(self):
        iy, iy2, _ = ou_path_integrals(np.array([]), np.array([]), 1.0, 5.0, 3.0, 0.0)
        assert iy == 0.0 and iy2 == 0.0

    def test_m_expansion_matches_path(self):
        sc = build_ou_levy(T=10.0)["M"]
        spec = IntegrationSpec(method="tensor", nodes=16, panels=8)
        batch = sample_batch(sc.control, 5, np.random.default_rng(0))
        for c in batch:
            pathwise = evaluate_multiple_integral(sc.expansion.terms[0][1], 1, c, sc.control, spec)
            assert pathwise == pytest.approx(sc.normalize(sc.functional(c)), abs=1e-6)

    def test_s_equals_v_at_lag_zero(self):
        sc = build_ou_levy(T=30.0, h=0.0)
        vals = sc["_joint_sampler"](np.random.default_rng(2), 50)
        assert np.max(np.abs(vals[:, 1] - vals[:, 2])) <= 1e-9

    def test_vectorised_m_sampler_matches_paths(self):
        sc = build_ou_levy(T=15.0, nu=LevyNu.skewed())
        fast = sc["M"].raw_sampler(np.random.default_rng(3), 30)
        slow = sc["_joint_sampler"](np.random.default_rng(3), 30)[:, 0]
        assert fast == pytest.approx(slow, rel=1e-9, abs=1e-9)

    @pytest.mark.parametrize("key, reps", [("M", 20_000), ("S", 3000)])
    def test_consistency(self, key, reps):
        res = build_ou_levy(T=20.0)[key].consistency(reps, seed=7)
        assert abs(res["mean_z"]) < 4 and abs(res["var_z"]) < 4

    def test_symmetric_compensator_vanishes(self):
        assert build_ou_levy(T=5.0)["_compensator"] == 0.0
        assert build_ou_levy(T=5.0, nu=LevyNu.skewed())["_compensator"] > 0


class TestRateStudy:
    def test_deterministic_and_thread_free(self):
        a = run_rate_study(build_pairwise, [16, 32, 64], 500, seed=3, threads=1, bootstrap=10)
        b = run_rate_study(build_pairwise, [16, 32, 64], 500, seed=3, threads=2, bootstrap=10)
        assert a.to_csv() == b.to_csv()
        assert len(a.rows) == 3 and np.isfinite(a.slope)

    def test_needs_three_scales(self):
        with pytest.raises(DomainError):
            run_rate_study(build_pairwise, [16, 32], 100, seed=0)

    def test_simulate_provenance(self):
        s = simulate(build_pairwise(16), 200, seed=9)
        assert len(s) == 200 and "seed=9" in s.seed_provenance

    def test_builders_registered(self):
        assert set(SCENARIO_BUILDERS) == {"dejong_cosine", "pairwise", "ou_levy"}
