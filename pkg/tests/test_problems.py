import math

import numpy as np
import pytest

from adastrat.geometry import HyperRectangle, Simplex, kuhn_decomposition
from adastrat.problems import (
    coulomb_change,
    disc_rect_area,
    diagonal_step_moments,
    fault_boundary,
    fault_cut_measure,
    fault_stress,
    fault_stress_physical,
    fixtures,
    get_problem,
    halfplane_fraction,
    hypersphere_indicator,
    hypersphere_mean,
    hypersphere_radius,
    linear_moments,
    problem_ids,
    reference_moments,
    sod,
    sod_density_physical,
    step_moments,
    thiem_head,
)

NO_HEAD = lambda r: np.zeros_like(np.asarray(r, dtype=float))


def mc_moments(geom, f, k=400_000, seed=0):
    v = f(geom.sample(np.random.default_rng(seed), k))
    return v.mean(), v.var(ddof=1), np.sqrt(v.var(ddof=1) / k)


class TestHypersphere:
    def test_radii(self):
        assert hypersphere_radius(2) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
        assert hypersphere_radius(3) == pytest.approx((3 / math.pi) ** (1 / 3), rel=1e-14)
        assert hypersphere_radius(4) == pytest.approx((16 / math.pi**2) ** 0.25, rel=1e-14)
        assert hypersphere_radius(4) == pytest.approx(1.1284, abs=1e-4)
        with pytest.raises(ValueError):
            hypersphere_radius(7)

    def test_indicator(self):
        f = hypersphere_indicator(2)
        np.testing.assert_array_equal(f(np.array([[0.0, 0.0], [1.0, 1.0]])), [1.0, 0.0])

    def test_means(self):
        assert hypersphere_mean(2) == pytest.approx(0.5, abs=1e-14)
        assert hypersphere_mean(3) == pytest.approx(0.5, abs=1e-14)

    def test_clipped_mean_against_monte_carlo(self):
        rng = np.random.default_rng(1)
        f = hypersphere_indicator(4)
        hits = sum(float(f(rng.random((1_000_000, 4))).sum()) for _ in range(4))
        est = hits / 4e6
        se = math.sqrt(est * (1 - est) / 4e6)
        assert abs(est - hypersphere_mean(4)) <= 4 * se

    def test_disc_rect_area(self):
        r = hypersphere_radius(2)
        assert disc_rect_area(r, (0, 0), (1, 1)) == pytest.approx(0.5, rel=1e-13)
        rng = np.random.default_rng(2)
        f = hypersphere_indicator(2)
        for _ in range(20):
            lo = rng.random(2) * 0.8
            box = HyperRectangle(lo, lo + rng.uniform(0.05, 0.2, 2))
            m, _, se = mc_moments(box, f, 200_000)
            assert disc_rect_area(r, box.lower, box.upper) / box.measure == pytest.approx(m, abs=4 * se + 1e-9)

    def test_registry_var(self):
        p = get_problem("hypersphere2")
        assert p.var_q == pytest.approx(0.25) and reference_moments(p) == (p.mean, p.var_q)


class TestFault:
    def test_no_head_examples(self):
        d_sigma, cff = coulomb_change(500.0, 1.0, NO_HEAD)
        assert d_sigma == pytest.approx(50 - 20.1105, abs=1e-10)
        assert cff == pytest.approx(9.8895, abs=1e-10)
        assert fault_stress_physical(500.0, 1.0, NO_HEAD) == 0.0
        assert float(fault_stress_physical(500.0, 0.5, NO_HEAD)) == pytest.approx(20 - 29.8895 * 0.4, abs=1e-10)
        assert float(fault_stress_physical(500.0, 0.5, NO_HEAD)) == pytest.approx(8.044, abs=1e-3)

    def test_head(self):
        assert thiem_head(10.0) == pytest.approx(50.0)
        assert thiem_head(1000.0) == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.diff(thiem_head(np.linspace(10, 1000, 50))) < 0)

    def test_discontinuous_surface(self):
        f = fault_stress().func
        g = (np.arange(200) + 0.5) / 200
        vals = f(np.array([(a, b) for a in g for b in g]))
        assert np.mean(vals == 0.0) > 0.05 and np.min(vals[vals > 0]) > 1.0

    def test_boundary_separates(self):
        f = fault_stress().func
        u1 = np.linspace(0.01, 0.99, 30)
        b = fault_boundary(u1)
        below = f(np.column_stack([u1, np.clip(b - 1e-6, 0, 1)]))
        above = f(np.column_stack([u1, np.clip(b + 1e-6, 0, 1)]))
        assert np.all(below > 0) and np.all(above == 0)

    def test_cut_measure_against_grid(self):
        f = fault_stress().func
        rng = np.random.default_rng(3)
        boxes = []
        for _ in range(60):
            lo = rng.random(2) * 0.9
            boxes.append(HyperRectangle(lo, lo + rng.uniform(0.01, 0.1, 2)))
        for box in boxes:
            t = np.linspace(0, 1, 81)
            pts = box.lower + np.array([(a, b) for a in t for b in t]) * (box.upper - box.lower)
            v = f(pts)
            cut = bool(np.any(v == 0) and np.any(v > 0))
            assert (fault_cut_measure([box]) > 0) == cut
        assert fault_cut_measure([HyperRectangle.unit(2)]) == 1.0


class TestSod:
    def test_nominal(self):
        assert float(sod_density_physical(1.0, 0.125, 0.5)) == 0.125

    def test_shifted_membrane(self):
        assert float(sod_density_physical(1.0, 0.125, 0.55)) == pytest.approx(0.26557371, rel=1e-6)

    def test_single_jump_in_membrane(self):
        x0 = np.linspace(0.45, 0.55, 2001)
        rho = sod_density_physical(1.0, 0.125, x0)
        assert np.sum(np.abs(np.diff(rho)) > 1e-9) == 1

    def test_unit_cube_map(self):
        f = sod().func
        u = np.array([[0.5, 0.5, 0.5], [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
        v = f(u)
        assert np.all(np.isfinite(v)) and np.all(v > 0)
        assert v[0] == pytest.approx(float(sod_density_physical(1.0, 0.125, 0.5)))


class TestFixtures:
    def test_ids(self):
        assert {"hypersphere2", "hypersphere3", "hypersphere4", "fault", "sod"} <= set(problem_ids())
        with pytest.raises(KeyError):
            get_problem("nope")
        for spec in fixtures():
            assert spec.moments is not None

    def test_linear_boxes(self):
        box = HyperRectangle([0.2], [0.7])
        assert linear_moments(box)[1] == pytest.approx(0.25 / 12)
        box = HyperRectangle([0.0, 0.5], [0.25, 1.0])
        assert linear_moments(box) == pytest.approx((0.875, (0.0625 + 0.25) / 12))

    @pytest.mark.parametrize("n", [2, 3])
    def test_linear_simplex_against_mc(self, n):
        f = lambda x: x.sum(axis=1)
        for s in kuhn_decomposition(n)[:3]:
            mean, var = linear_moments(s)
            m, v, se = mc_moments(s, f)
            assert mean == pytest.approx(m, abs=4 * se)
            assert var == pytest.approx(v, rel=0.02)

    def test_step(self):
        assert step_moments(HyperRectangle.unit(2)) == pytest.approx((0.5, 0.25))
        assert step_moments(HyperRectangle([0.0], [0.8]), 0.6) == pytest.approx((0.25, 0.1875))
        assert step_moments(HyperRectangle([0.6], [0.8]), 0.5) == (1.0, 0.0)

    def test_step_on_triangle(self):
        tri = Simplex([[0, 0], [1, 0], [1, 1]])
        frac, var = step_moments(tri, 0.5)
        assert frac == pytest.approx(0.75) and var == pytest.approx(0.1875)

    def test_diagonal(self):
        lower, upper = kuhn_decomposition(2)
        fr = sorted(diagonal_step_moments(s)[0] for s in (lower, upper))
        assert fr == pytest.approx([0.0, 1.0], abs=1e-12)
        assert diagonal_step_moments(HyperRectangle.unit(2)) == pytest.approx((0.5, 0.25))
        box = HyperRectangle([0.0, 0.0], [0.5, 0.25])
        f = lambda x: (x[:, 1] >= x[:, 0]).astype(float)
        m, _, se = mc_moments(box, f)
        assert diagonal_step_moments(box)[0] == pytest.approx(m, abs=4 * se)

    def test_halfplane(self):
        assert halfplane_fraction(HyperRectangle.unit(2), (1.0, 1.0), 1.0) == pytest.approx(0.5)


class TestReferenceCache:
    def test_written_and_reused(self, tmp_path):
        spec = get_problem("step1d")
        spec = type(spec)("stepcache", 1, spec.func)
        mean, var = reference_moments(spec, tmp_path, samples=20_000, seed=5)
        path = tmp_path / "stepcache.ref"
        assert path.exists()
        assert abs(mean - 0.5) < 0.02 and abs(var - 0.25) < 0.01
        path.write_text(path.read_text().replace(repr(mean), "0.123"))
        assert reference_moments(spec, tmp_path, samples=20_000, seed=5)[0] == 0.123
        assert reference_moments(spec, tmp_path, samples=20_000, seed=6)[0] != 0.123

    def test_env_override(self, tmp_path, monkeypatch):
        from adastrat.problems import default_cache_dir
        monkeypatch.setenv("ADASTRAT_CACHE", str(tmp_path))
        assert default_cache_dir() == tmp_path
