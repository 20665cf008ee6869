"""Benchmark models on the unit hypercube and analytic test fixtures."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn, ndtr

from .domain import ModelFunction, ParameterMap, RandomSource, lognormal, product_map, uniform
from .geometry import HyperRectangle, Simplex
from .riemann import sample_density

REFERENCE_SAMPLES = 1_000_000
REFERENCE_SEED = 20240101


@dataclass
class ProblemSpec:
    id: str
    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    description: str = ""
    units: str = ""
    param_map: ParameterMap | None = None
    mean: float | None = None
    var_q: float | None = None
    moments: Callable[[object], tuple[float, float]] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.param_map is not None and self.param_map.dim != self.dim:
            raise ValueError("parameter map dimension does not match the problem")

    def model(self) -> ModelFunction:
        return ModelFunction(self.func, self.dim, self.id)


# --- hypersphere ----------------------------------------------------------

def hypersphere_radius(n: int) -> float:
    """Radius of the n-ball with volume 2**(n-1)."""
    if not 1 <= n <= 6:
        raise ValueError("hypersphere problems are defined for 1 <= n <= 6")
    return float((2.0 ** (n - 1) * gamma_fn(n / 2 + 1) / math.pi ** (n / 2)) ** (1.0 / n))


def hypersphere_indicator(n: int) -> Callable[[np.ndarray], np.ndarray]:
    r2 = hypersphere_radius(n) ** 2

    def f(u):
        u = np.atleast_2d(u)
        return (np.sum(u * u, axis=1) <= r2).astype(float)

    return f


def _quarter_disc_area(s):
    """Area of {a, b in [0, 1]: a^2 + b^2 <= s}."""
    s = np.asarray(s, dtype=float)
    rho = np.sqrt(np.maximum(s, 0.0))
    inner = math.pi * s / 4
    safe = np.clip(rho, 1.0, math.sqrt(2.0))
    mid = np.sqrt(np.maximum(s - 1.0, 0.0)) + s / 2 * (math.pi / 2 - 2 * np.arccos(1.0 / safe))
    return np.where(s <= 0, 0.0, np.where(rho <= 1, inner, np.where(s >= 2, 1.0, mid)))


def _quarter_disc_density(s):
    """d/ds of the quarter-disc area: half the angle of the arc inside the square."""
    rho = math.sqrt(s)
    if rho <= 1:
        return math.pi / 4
    if rho >= math.sqrt(2):
        return 0.0
    return 0.5 * (math.pi / 2 - 2 * math.acos(1.0 / rho))


def hypersphere_mean(n: int) -> float:
    """Volume of the radius-r_n ball clipped to the unit cube (exact up to quadrature)."""
    r2 = hypersphere_radius(n) ** 2
    if r2 <= 1.0:
        return 2.0 ** (n - 1) / 2.0**n
    if n == 2:
        return float(_quarter_disc_area(r2))
    if n == 3:
        val, _ = integrate.quad(lambda x: float(_quarter_disc_area(r2 - x * x)), 0.0, 1.0,
                                epsabs=1e-13, epsrel=1e-13, limit=200)
        return val
    if n == 4:
        # convolve the squared-norm law of two coordinates with that of the other two
        pts = sorted({1.0, max(r2 - 2.0, 0.0), max(r2 - 1.0, 0.0)} - {0.0})
        val, _ = integrate.quad(lambda s: _quarter_disc_density(s) * float(_quarter_disc_area(r2 - s)),
                                0.0, 2.0, points=pts, epsabs=1e-13, epsrel=1e-13, limit=200)
        return val
    raise NotImplementedError("clipped hypersphere volume is implemented for n <= 4")


def hypersphere(n: int) -> ProblemSpec:
    mu = hypersphere_mean(n)
    return ProblemSpec(
        f"hypersphere{n}", n, hypersphere_indicator(n),
        description=f"indicator of the {n}-ball of volume 2^{n - 1} centred at the origin",
        units="1", mean=mu, var_q=mu * (1.0 - mu),
        moments=(lambda g: _disc_moments(g, hypersphere_radius(2))) if n == 2 else None,
    )


def disc_rect_area(r: float, lower, upper) -> float:
    """Area of the disc of radius r at the origin inside a rectangle in the first quadrant."""
    x0, y0 = lower
    x1, y1 = upper
    if min(x0, y0) < 0:
        raise ValueError("rectangle must lie in the first quadrant")

    def prim(x):
        x = min(x, r)
        return 0.5 * (x * math.sqrt(r * r - x * x) + r * r * math.asin(x / r))

    xa = math.sqrt(max(r * r - y1 * y1, 0.0))
    xb = math.sqrt(max(r * r - y0 * y0, 0.0))
    area = 0.0
    lo, hi = x0, min(x1, xa)
    if hi > lo:
        area += (hi - lo) * (y1 - y0)
    lo, hi = max(x0, xa), min(x1, xb)
    if hi > lo:
        area += prim(hi) - prim(lo) - y0 * (hi - lo)
    return area


def _disc_moments(geom, r):
    if not isinstance(geom, HyperRectangle):
        raise TypeError("exact quarter-disc moments are available for rectangles only")
    frac = disc_rect_area(r, geom.lower, geom.upper) / geom.measure
    return frac, frac * (1.0 - frac)


# --- fault stress ---------------------------------------------------------

RHO_W, G, DEPTH, THICKNESS = 1000.0, 9.81, 2000.0, 100.0
SIGMA_TOTAL, DELTA_TAU, DELTA_F = 50.0, 20.0, 0.8
HEAD_RADIUS, HEAD_AT_WELL, WELL_REF = 1000.0, 50.0, 10.0


def thiem_head(r):
    """Steady radial head, 50 m at 10 m from the well and 0 at 1000 m."""
    a = HEAD_AT_WELL / math.log(HEAD_RADIUS / WELL_REF)
    return a * np.log(HEAD_RADIUS / np.asarray(r, dtype=float))


def fault_parameters(lognormal_moments: bool = False) -> ParameterMap:
    return product_map([uniform(10.0, 1000.0), lognormal(0.2, 0.7, moments=lognormal_moments)])


def coulomb_change(distance, friction, head=thiem_head):
    """Normal stress change and Coulomb failure change in MPa."""
    p = RHO_W * G * (DEPTH + 0.5 * THICKNESS + head(distance)) / 1e6
    d_sigma = SIGMA_TOTAL - p
    return d_sigma, d_sigma * friction - DELTA_TAU


def fault_stress_physical(distance, friction, head=thiem_head):
    d_sigma, cff = coulomb_change(distance, friction, head)
    s = DELTA_TAU - d_sigma * friction * DELTA_F
    return np.where(cff < 0.0, s, 0.0)


def fault_stress(head=thiem_head, lognormal_moments: bool = False) -> ProblemSpec:
    pm = fault_parameters(lognormal_moments)

    def f(u):
        y = pm(np.atleast_2d(u))
        return fault_stress_physical(y[:, 0], y[:, 1], head)

    return ProblemSpec("fault", 2, f, "stress threshold for fault stability", "MPa", param_map=pm)


def fault_boundary(u1, head=thiem_head, lognormal_moments: bool = False):
    """Second unit coordinate of the zero-Coulomb-change curve above ``u1``."""
    pm = fault_parameters(lognormal_moments)
    dist = pm.marginals[0].ppf(np.asarray(u1, dtype=float))
    p = RHO_W * G * (DEPTH + 0.5 * THICKNESS + head(dist)) / 1e6
    mu_crit = DELTA_TAU / (SIGMA_TOTAL - p)
    mu, s = pm.marginals[1].params
    return ndtr((np.log(mu_crit) - mu) / s)


def fault_cut_measure(strata, head=thiem_head, lognormal_moments: bool = False) -> float:
    """Total measure of rectangular strata crossed by the fault-stress discontinuity.

    The crossing curve is monotone in the first coordinate, so a rectangle is
    cut iff its second-coordinate range overlaps the curve's range on it.
    """
    total = 0.0
    for rec in strata:
        g = rec.geom if hasattr(rec, "geom") else rec
        if not isinstance(g, HyperRectangle):
            raise TypeError("cut measure is implemented for rectangles")
        b = fault_boundary(np.array([g.lower[0], g.upper[0]]), head, lognormal_moments)
        if max(g.lower[1], b.min()) <= min(g.upper[1], b.max()):
            total += g.measure
    return total


# --- Sod shock tube ---------------------------------------------------------

SOD_X, SOD_T, SOD_P_LEFT, SOD_P_RIGHT = 0.7, 0.1, 1.0, 0.1


def sod_parameters() -> ParameterMap:
    return product_map([uniform(0.7, 1.3), uniform(0.05, 0.2), uniform(0.45, 0.55)])


def sod_density_physical(rho_l, rho_r, x0, p_l=SOD_P_LEFT, p_r=SOD_P_RIGHT):
    xi = (SOD_X - np.asarray(x0, dtype=float)) / SOD_T
    return sample_density(xi, rho_l, 0.0, p_l, rho_r, 0.0, p_r)


def sod() -> ProblemSpec:
    pm = sod_parameters()

    def f(u):
        y = pm(np.atleast_2d(u))
        return sod_density_physical(y[:, 0], y[:, 1], y[:, 2])

    return ProblemSpec("sod", 3, f, "density at x=0.7, t=0.1 of the Sod shock tube", "1", param_map=pm)


# --- analytic fixtures ------------------------------------------------------

def _simplex_second_moment(vertices):
    v = np.asarray(vertices, dtype=float)
    n = v.shape[1]
    s = v.sum(axis=0)
    return (v.T @ v + np.outer(s, s)) / ((n + 1) * (n + 2))


def linear_moments(geom) -> tuple[float, float]:
    """Mean and variance of sum(y) on a rectangle or simplex."""
    if isinstance(geom, HyperRectangle):
        w = geom.upper - geom.lower
        return float(np.sum(geom.lower + geom.upper) / 2), float(np.sum(w * w) / 12)
    v = geom.vertices
    centre = v.mean(axis=0)
    cov = _simplex_second_moment(v) - np.outer(centre, centre)
    return float(centre.sum()), float(cov.sum())


def _clip_halfplane(poly, normal, offset):
    """Part of a convex polygon with ``normal . x >= offset``."""
    out = []
    k = len(poly)
    for i in range(k):
        a, b = poly[i], poly[(i + 1) % k]
        da, db = np.dot(normal, a) - offset, np.dot(normal, b) - offset
        if da >= 0:
            out.append(a)
        if da * db < 0:
            out.append(a + da / (da - db) * (b - a))
    return out


def _polygon_area(poly):
    if len(poly) < 3:
        return 0.0
    x = np.array([p[0] for p in poly])
    y = np.array([p[1] for p in poly])
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _polygon(geom):
    if isinstance(geom, HyperRectangle):
        (x0, y0), (x1, y1) = geom.lower, geom.upper
        return [np.array(p, dtype=float) for p in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))]
    return [np.array(v) for v in geom.vertices]


def halfplane_fraction(geom, normal, offset) -> float:
    """Fraction of a 2D rectangle or triangle with ``normal . x >= offset``."""
    poly = _polygon(geom)
    full = _polygon_area(poly)
    return _polygon_area(_clip_halfplane(poly, np.asarray(normal, float), offset)) / full


def step_moments(geom, threshold: float = 0.5, axis: int = 0) -> tuple[float, float]:
    """Mean and variance of 1{y_axis >= threshold} on a rectangle."""
    if isinstance(geom, Simplex):
        if geom.dim != 2:
            raise TypeError("step moments on simplices are implemented in 2D")
        normal = np.zeros(2)
        normal[axis] = 1.0
        frac = halfplane_fraction(geom, normal, threshold)
    else:
        lo, hi = geom.lower[axis], geom.upper[axis]
        frac = float(np.clip((hi - threshold) / (hi - lo), 0.0, 1.0))
    return frac, frac * (1.0 - frac)


def diagonal_step_moments(geom) -> tuple[float, float]:
    """Mean and variance of 1{y2 >= y1} on a 2D rectangle or triangle."""
    frac = halfplane_fraction(geom, (-1.0, 1.0), 0.0)
    return frac, frac * (1.0 - frac)


def linear_problem(n: int) -> ProblemSpec:
    return ProblemSpec(f"linear{n}", n, lambda u: np.sum(np.atleast_2d(u), axis=1), "sum of coordinates",
                       mean=n / 2, var_q=n / 12, moments=linear_moments)


def step_problem(threshold: float = 0.5, dim: int = 1) -> ProblemSpec:
    return ProblemSpec(
        "step1d" if dim == 1 else f"step{dim}", dim,
        lambda u: (np.atleast_2d(u)[:, 0] >= threshold).astype(float),
        "unit step in the first coordinate", mean=1 - threshold, var_q=threshold * (1 - threshold),
        moments=lambda g: step_moments(g, threshold),
    )


def diagonal_step_problem() -> ProblemSpec:
    return ProblemSpec("diagstep", 2, lambda u: (np.atleast_2d(u)[:, 1] >= np.atleast_2d(u)[:, 0]).astype(float),
                       "unit step across the diagonal", mean=0.5, var_q=0.25, moments=diagonal_step_moments)


def fixtures() -> list[ProblemSpec]:
    return [linear_problem(1), linear_problem(2), step_problem(), step_problem(dim=2), diagonal_step_problem()]


# --- registry and reference variance -----------------------------------------

_REGISTRY: dict[str, Callable[[], ProblemSpec]] = {
    "hypersphere2": lambda: hypersphere(2),
    "hypersphere3": lambda: hypersphere(3),
    "hypersphere4": lambda: hypersphere(4),
    "fault": fault_stress,
    "sod": sod,
    "linear1": lambda: linear_problem(1),
    "linear2": lambda: linear_problem(2),
    "step1d": step_problem,
    "diagstep": diagonal_step_problem,
}


def problem_ids() -> list[str]:
    return sorted(_REGISTRY)


def get_problem(pid: str) -> ProblemSpec:
    try:
        return _REGISTRY[pid]()
    except KeyError:
        raise KeyError(f"unknown problem {pid!r}; choose from {', '.join(problem_ids())}") from None


def default_cache_dir() -> Path:
    return Path(os.environ.get("ADASTRAT_CACHE", Path.home() / ".cache" / "adastrat"))


def _reference_mc(problem: ProblemSpec, samples: int, seed: int, chunk: int = 200_000):
    rng = RandomSource(seed).stream(0, 0)
    count, total, total_sq = 0, 0.0, 0.0
    shift = None
    while count < samples:
        k = min(chunk, samples - count)
        v = np.asarray(problem.func(rng.random((k, problem.dim))), dtype=float)
        if shift is None:
            shift = float(v.mean())
        d = v - shift
        total += float(d.sum())
        total_sq += float(np.dot(d, d))
        count += k
    mean = total / count
    return shift + mean, (total_sq - count * mean * mean) / (count - 1)


def reference_moments(problem: ProblemSpec, cache_dir: Path | str | None = None,
                      samples: int = REFERENCE_SAMPLES, seed: int = REFERENCE_SEED) -> tuple[float, float]:
    """Mean and Var(Q) of a problem; exact when known, else a cached plain MC run.

    The sidecar file ``<id>.ref`` holds ``key=value`` lines and is only
    recomputed when absent or produced with a different seed or sample count.
    """
    if problem.mean is not None and problem.var_q is not None:
        return problem.mean, problem.var_q
    path = Path(cache_dir or default_cache_dir()) / f"{problem.id}.ref"
    if path.exists():
        data = dict(line.split("=", 1) for line in path.read_text().split() if "=" in line)
        if int(data.get("seed", -1)) == seed and int(data.get("samples", -1)) == samples:
            return float(data["mean"]), float(data["var"])
    mean, var = _reference_mc(problem, samples, seed)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(f"mean={mean!r}\nvar={var!r}\nseed={seed}\nsamples={samples}\n")
    tmp.replace(path)
    return mean, var
