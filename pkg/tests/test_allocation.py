import numpy as np
import pytest

from adastrat.allocation import (
    HybridParameter,
    batch_size,
    proportional_floor,
    sequential_counts,
    sequential_counts_reserve_one,
    target_rates,
)


class TestRates:
    def test_examples(self):
        np.testing.assert_allclose(target_rates([0.5, 0.5], [1, 3], 0.0), [0.5, 0.5])
        np.testing.assert_allclose(target_rates([0.5, 0.5], [1, 3], 1.0), [0.25, 0.75], rtol=1e-14)
        np.testing.assert_allclose(target_rates([0.5, 0.5], [1, 3], 0.5), [0.375, 0.625], rtol=1e-14)

    def test_zero_spread_fallback(self):
        np.testing.assert_array_equal(target_rates([0.3, 0.7], [0, 0], 0.9), [0.3, 0.7])

    def test_sum_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            m = int(rng.integers(1, 30))
            p = rng.dirichlet(np.ones(m))
            s = rng.exponential(1.0, m) * (rng.random(m) > 0.3)
            q = target_rates(p, s, float(rng.random()))
            assert abs(q.sum() - p.sum()) <= 1e-12
            assert np.all(q >= 0)

    def test_hybrid_parameter(self):
        HybridParameter(0.95)
        with pytest.raises(ValueError):
            HybridParameter(0.97)
        with pytest.raises(ValueError):
            HybridParameter(0.5, alpha_max=1.2)


class TestSequential:
    def test_top_up(self):
        assert sequential_counts([0.5, 0.5], [10, 0], 10, 10).counts.tolist() == [0, 10]

    def test_uniform_start(self):
        assert sequential_counts([0.25] * 4, [0] * 4, 0, 8).counts.tolist() == [2, 2, 2, 2]

    def test_oversampled(self):
        plan = sequential_counts([0.5, 0.5], [40, 2], 42, 10)
        assert plan.counts[0] == 0 and plan.total <= 10

    def test_zero_batch(self):
        assert sequential_counts([0.5, 0.5], [1, 1], 2, 0).total == 0
        with pytest.raises(ValueError):
            sequential_counts([1.0], [1], 1, -1)

    def test_truncation_by_smallest_deficit(self):
        # raw ceil plan (3, 3, 3) for target 2.67 each; one sample must go
        plan = sequential_counts([1 / 3] * 3, [0, 0, 0], 0, 8)
        assert plan.counts.tolist() == [3, 3, 2]

    def test_never_sampled_protected(self):
        plan = sequential_counts([0.98, 0.01, 0.01], [0, 0, 0], 0, 3)
        assert plan.counts.tolist() == [1, 1, 1]

    def test_invariants_random(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            m = int(rng.integers(1, 12))
            q = rng.dirichlet(np.ones(m))
            cur = rng.integers(0, 50, m)
            n_new = int(rng.integers(0, 60))
            plan = sequential_counts(q, cur, int(cur.sum()), n_new)
            assert np.all(plan.counts >= 0)
            assert plan.total <= n_new

    def test_frozen_rates_converge(self):
        q = np.array([0.05, 0.15, 0.3, 0.5])
        cur = np.zeros(4, dtype=int)
        for _ in range(100):
            cur += sequential_counts(q, cur, int(cur.sum()), 40).counts
        n = cur.sum()
        assert n == 4000
        assert np.max(np.abs(cur / n - q)) < 1.0 / cur.min()


class TestReserveOne:
    def test_minimal(self):
        assert sequential_counts_reserve_one([0.2, 0.3, 0.5], [5, 5, 5], 15, 3).counts.tolist() == [1, 1, 1]

    def test_worked_truncation(self):
        plan = sequential_counts_reserve_one([0.9, 0.05, 0.05], [0, 0, 0], 0, 13, 3)
        assert plan.counts.tolist() == [10, 2, 1]

    def test_zero_spread_stratum(self):
        q = target_rates([0.5, 0.5], [0.0, 1.0], 0.9)
        assert sequential_counts_reserve_one(q, [50, 10], 60, 4).counts.min() >= 1

    def test_requires_batch(self):
        with pytest.raises(ValueError):
            sequential_counts_reserve_one([0.5, 0.5], [1, 1], 2, 1)

    def test_random_dominance(self):
        rng = np.random.default_rng(2)
        for _ in range(300):
            m = int(rng.integers(1, 10))
            q = rng.dirichlet(np.ones(m) * 0.3)
            cur = rng.integers(0, 30, m)
            n_new = int(rng.integers(m, 5 * m + 1))
            plan = sequential_counts_reserve_one(q, cur, int(cur.sum()), n_new)
            assert plan.counts.min() >= 1 and plan.total <= n_new


class TestFloorAndCap:
    def test_floor_formula(self):
        f = proportional_floor([0.5, 0.5], [3, 0], 3, 10, 0.9)
        # (1 - 0.9) * 0.5 * 13 = 0.65
        assert f.tolist() == [0, 1]

    def test_floor_survives_truncation(self):
        # a zero-spread stratum holding most of the measure would lose its
        # proportional share to the smallest-deficit rule
        p = np.array([0.6, 0.2, 0.2])
        q = target_rates(p, [0.0, 1.0, 1.0], 0.9)
        cur = np.array([1, 20, 20])
        plain = sequential_counts(q, cur, 41, 10)
        floor = proportional_floor(p, cur, 41, 10, 0.9)
        kept = sequential_counts(q, cur, 41, 10, floor=floor)
        assert plain.counts.tolist() == [2, 4, 4]
        assert floor[0] == 3
        assert kept.counts.tolist() == [3, 4, 3]

    def test_cap(self):
        plan = sequential_counts([0.5, 0.5], [0, 0], 0, 10, cap=4)
        assert plan.total == 4
        loose = sequential_counts([0.5, 0.5], [30, 0], 30, 10, cap=100)
        assert loose.counts.tolist() == [0, 10]


class TestBatchSize:
    def test_examples(self):
        assert batch_size(1, 30) == 30
        assert batch_size(7, 5) == 35
        assert batch_size(1, 30, remaining=12) == 12
        assert batch_size(3, 4, remaining=-2) == 0

    def test_invalid(self):
        with pytest.raises(ValueError):
            batch_size(0, 3)
        with pytest.raises(ValueError):
            batch_size(2, 0)
