import math

import numpy as np
import pytest
from scipy import stats

from poisson_stein import (ControlMeasure, DomainError, DuplicatePointError, Functional, PointConfiguration,
                           add_one_cost, sample_batch, sample_configuration, second_difference, ustat_evaluate)
from poisson_stein.chaos import Kernel, evaluate_multiple_integral
from poisson_stein.point_process import point_count

UNIT = ControlMeasure.uniform([0.0], [1.0], 1.0)


class TestSampling:
    def test_mean_count(self):
        n = 12.0
        c = UNIT.with_intensity(n)
        counts = np.array([len(sample_configuration(c, s)) for s in range(10_000)])
        assert abs(counts.mean() - n) < 3 * math.sqrt(n / counts.size)

    def test_disjoint_boxes_independent(self):
        c = UNIT.with_intensity(3.0)
        batch = sample_batch(c, 20_000, np.random.default_rng(2))
        left = batch.per_replicate_sum(batch.points[:, 0] < 0.5)
        right = batch.counts - left
        a, b = np.minimum(left, 4).astype(int), np.minimum(right, 4).astype(int)
        table = np.zeros((5, 5))
        np.add.at(table, (a, b), 1)
        assert stats.chi2_contingency(table).pvalue > 0.01

    def test_counts_are_poisson(self):
        batch = sample_batch(UNIT.with_intensity(5.0), 50_000, np.random.default_rng(3))
        assert abs(batch.counts.var() - 5.0) < 4 * math.sqrt(2 * 25 / batch.reps + 5 / batch.reps)

    def test_same_seed_same_configuration(self):
        assert sample_configuration(UNIT.with_intensity(20), 7) == sample_configuration(UNIT.with_intensity(20), 7)

    def test_batch_views_agree(self):
        batch = sample_batch(UNIT.with_intensity(4.0), 50, np.random.default_rng(0))
        padded, mask = batch.padded()
        for i, cfg in enumerate(batch):
            assert np.array_equal(padded[i][mask[i]], cfg.points)
        assert batch.per_replicate_sum(np.ones(batch.points.shape[0])) == pytest.approx(batch.counts)


class TestConfiguration:
    def test_duplicates_rejected(self):
        with pytest.raises(DuplicatePointError):
            PointConfiguration([[0.1], [0.1]], UNIT)

    def test_outside_support_rejected(self):
        with pytest.raises(DomainError):
            PointConfiguration([[1.5]], UNIT)
        with pytest.raises(DomainError):
            PointConfiguration([[0.5]], UNIT).extended([2.0])

    def test_points_read_only(self):
        cfg = PointConfiguration([[0.2], [0.3]], UNIT)
        with pytest.raises(ValueError):
            cfg.points[0, 0] = 0.9


class TestDifferenceOperators:
    def test_add_one_cost_of_count(self):
        cfg = sample_configuration(UNIT.with_intensity(5), 1)
        assert add_one_cost(point_count, cfg, [0.123456]) == 1.0

    def test_second_difference_of_count(self):
        cfg = sample_configuration(UNIT.with_intensity(5), 2)
        assert second_difference(point_count, cfg, [0.11], [0.77]) == 0.0

    def test_second_difference_of_first_chaos(self):
        f = Kernel(1, lambda x: np.sin(3.0 * x[..., 0]))
        F = Functional(lambda c: evaluate_multiple_integral(f, 1, c, UNIT.with_intensity(6)))
        cfg = sample_configuration(UNIT.with_intensity(6), 3)
        assert second_difference(F, cfg, [0.21], [0.64]) == pytest.approx(0.0, abs=1e-12)

    def test_second_difference_of_ustat(self):
        h = Kernel(2, lambda x, y: np.exp(-np.abs(x[..., 0] - y[..., 0])))
        F = Functional(lambda c: ustat_evaluate(h, 2, c))
        cfg = sample_configuration(UNIT.with_intensity(8), 4)
        z1, z2 = np.array([0.31]), np.array([0.58])
        assert second_difference(F, cfg, z1, z2) == pytest.approx(2.0 * float(h(z1, z2)), rel=1e-12)
