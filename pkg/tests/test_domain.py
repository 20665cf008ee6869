import math

import numpy as np
import pytest

from adastrat.domain import (
    DomainError,
    ModelFunction,
    RandomSource,
    exponential,
    inverse_cdf,
    lognormal,
    map_point,
    normal_quantile,
    product_map,
    uniform,
)


def _quantile_by_bisection(p, lo=-40.0, hi=40.0):
    # Phi(x) = (1 + erf(x / sqrt 2)) / 2, inverted by bisection
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * (1.0 + math.erf(mid / math.sqrt(2.0))) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestNormalQuantile:
    @pytest.mark.parametrize("p", [1e-8, 1e-4, 0.025, 0.2, 0.5, 0.8, 0.975, 0.9999])
    def test_against_bisection(self, p):
        assert normal_quantile(p) == pytest.approx(_quantile_by_bisection(p), abs=1e-9)

    def test_coverage_constant(self):
        assert normal_quantile(0.975) == pytest.approx(1.959963985, abs=1e-9)


class TestInverseCdf:
    def test_uniform_endpoint(self):
        assert inverse_cdf(uniform(10, 1000), 0.0) == 10.0
        assert inverse_cdf(uniform(10, 1000), 1.0) == 1000.0

    def test_lognormal_median(self):
        assert inverse_cdf(lognormal(0.2, 0.7), 0.5) == pytest.approx(math.exp(0.2), rel=1e-12)
        assert math.exp(0.2) == pytest.approx(1.2214, abs=1e-4)

    def test_lognormal_against_bisection(self):
        for p in (0.01, 0.3, 0.9):
            assert inverse_cdf(lognormal(0.2, 0.7), p) == pytest.approx(
                math.exp(0.2 + 0.7 * _quantile_by_bisection(p)), rel=1e-9)

    def test_exponential_tiny_mean(self):
        assert inverse_cdf(exponential(1e-9), 0.5) == pytest.approx(1e-9 * math.log(2), rel=1e-12)

    @pytest.mark.parametrize("u", [-0.1, 1.5, float("nan")])
    def test_outside_unit_interval(self, u):
        with pytest.raises(DomainError):
            inverse_cdf(uniform(0, 1), u)

    @pytest.mark.parametrize("marginal", [uniform(-2, 3), lognormal(0.2, 0.7), exponential(4.0),
                                          lognormal(1.0, 0.5, moments=True)])
    def test_monotone(self, marginal):
        vals = inverse_cdf(marginal, np.linspace(0, 1, 1000)[1:-1])
        assert np.all(np.diff(vals) >= 0)

    @pytest.mark.parametrize("marginal", [uniform(-2, 3), lognormal(0.2, 0.7), exponential(4.0)])
    def test_mean_from_uniform_stream(self, marginal):
        rng = np.random.default_rng(11)
        draws = inverse_cdf(marginal, rng.random(100_000))
        se = math.sqrt(marginal.variance() / len(draws))
        assert abs(draws.mean() - marginal.mean()) <= 3 * se

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            uniform(1, 1)
        with pytest.raises(ValueError):
            lognormal(0, 0)
        with pytest.raises(ValueError):
            exponential(-1)

    def test_lognormal_moment_reading(self):
        m = lognormal(0.2, 0.7, moments=True)
        assert m.mean() == pytest.approx(0.2)
        assert math.sqrt(m.variance()) == pytest.approx(0.7)


class TestMapPoint:
    def test_identity(self):
        pm = product_map([uniform(0, 1), uniform(0, 1)])
        np.testing.assert_allclose(map_point(pm, [0.3, 0.7]), [0.3, 0.7])

    def test_midpoints(self):
        pm = product_map([uniform(0.7, 1.3), uniform(0.05, 0.2)])
        np.testing.assert_allclose(map_point(pm, [0.5, 0.5]), [1.0, 0.125])

    def test_mixed(self):
        pm = product_map([uniform(10, 1000), lognormal(0.2, 0.7)])
        np.testing.assert_allclose(map_point(pm, [1.0, 0.5]), [1000, math.exp(0.2)])

    def test_batch_and_mismatch(self):
        pm = product_map([uniform(0, 2), uniform(0, 4)])
        assert map_point(pm, np.full((5, 2), 0.5)).shape == (5, 2)
        with pytest.raises(ValueError):
            map_point(pm, [0.1, 0.2, 0.3])


class TestModelFunction:
    def test_counter_and_purity(self):
        f = ModelFunction(lambda u: u.sum(axis=1), 2)
        pts = np.array([[0.1, 0.2], [0.3, 0.4]])
        a, b = f(pts), f(pts)
        np.testing.assert_array_equal(a, b)
        assert f.evaluations == 4
        f.reset()
        assert f.evaluations == 0

    def test_dimension_check(self):
        f = ModelFunction(lambda u: u[:, 0], 3)
        with pytest.raises(ValueError):
            f(np.zeros((2, 2)))


class TestRandomSource:
    def test_reproducible(self):
        a = RandomSource(42).unit_points(3, 7, 100, 4)
        b = RandomSource(42).unit_points(3, 7, 100, 4)
        assert a.tobytes() == b.tobytes()

    def test_streams_differ(self):
        src = RandomSource(42)
        base = src.unit_points(3, 7, 10, 2)
        for other in (src.unit_points(4, 7, 10, 2), src.unit_points(3, 8, 10, 2),
                      RandomSource(43).unit_points(3, 7, 10, 2)):
            assert not np.array_equal(base, other)

    def test_draw_order_irrelevant(self):
        src = RandomSource(5)
        first = src.unit_points(1, 1, 8, 3)
        src.unit_points(2, 1, 1000, 3)
        assert np.array_equal(first, src.unit_points(1, 1, 8, 3))
