"""Stratum shapes on the unit hypercube.

Two shape classes are supported, axis-aligned hyperrectangles and simplices.
Both are bisected into two children of the same class and exactly half the
parent measure. A point lying on a bisection plane belongs to the ``plus``
child.

Split planes are identified by an axis index for rectangles and by a vertex
pair ``(i, k)`` with ``i < k`` for simplices. For a simplex the ``minus``
child keeps vertex ``i`` and the ``plus`` child keeps vertex ``k``.
"""

from __future__ import annotations

import itertools
import math
from typing import NamedTuple, Sequence

import numpy as np

MAX_DIM_RECT = 20
MAX_DIM_SIMPLEX = 8
PIVOT_TOL = 1e-12

MINUS, PLUS = 0, 1


class GeometryError(ValueError):
    pass


class HyperRectangle:
    kind = "hyperrect"

    def __init__(self, lower, upper, measure: float | None = None):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise GeometryError("lower and upper must be vectors of equal length")
        if not np.all(self.lower < self.upper):
            raise GeometryError("degenerate hyperrectangle")
        if np.any(self.lower < 0.0) or np.any(self.upper > 1.0):
            raise GeometryError("hyperrectangle must lie in the unit cube")
        self._measure = float(np.prod(self.upper - self.lower)) if measure is None else measure

    @classmethod
    def unit(cls, n: int) -> "HyperRectangle":
        if not 1 <= n <= MAX_DIM_RECT:
            raise GeometryError(f"dimension {n} out of range [1, {MAX_DIM_RECT}]")
        return cls(np.zeros(n), np.ones(n), measure=1.0)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def measure(self) -> float:
        return self._measure

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        u = rng.random((k, self.dim))
        return self.lower + (self.upper - self.lower) * u

    def contains(self, points) -> np.ndarray | bool:
        # half-open [lower, upper) except on the closed outer face of the cube
        p = np.asarray(points, dtype=float)
        below_upper = (p < self.upper) | ((self.upper == 1.0) & (p <= 1.0))
        inside = np.all((p >= self.lower) & below_upper, axis=-1)
        return bool(inside) if p.ndim == 1 else inside

    def split_planes(self) -> list[int]:
        return list(range(self.dim))

    def midpoint(self, axis: int) -> float:
        return 0.5 * (self.lower[axis] + self.upper[axis])

    def bisect(self, plane: int) -> tuple["HyperRectangle", "HyperRectangle"]:
        if plane not in range(self.dim):
            raise GeometryError(f"invalid split axis {plane!r}")
        mid = self.midpoint(plane)
        up_minus = self.upper.copy()
        up_minus[plane] = mid
        lo_plus = self.lower.copy()
        lo_plus[plane] = mid
        half = 0.5 * self._measure
        return (HyperRectangle(self.lower, up_minus, measure=half),
                HyperRectangle(lo_plus, self.upper, measure=half))

    def sides(self, points) -> np.ndarray:
        """Boolean ``(k, n_planes)`` array, True where a point is on the plus side."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return p >= 0.5 * (self.lower + self.upper)

    def __repr__(self) -> str:
        return f"HyperRectangle(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class Simplex:
    kind = "simplex"

    def __init__(self, vertices, measure: float | None = None):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] + 1:
            raise GeometryError("a simplex in R^n needs n+1 vertices")
        n = v.shape[1]
        if not 1 <= n <= MAX_DIM_SIMPLEX:
            raise GeometryError(f"dimension {n} out of range [1, {MAX_DIM_SIMPLEX}]")
        self.vertices = v
        # affine system [v_0 .. v_n; 1 .. 1] lambda = [p; 1]
        system = np.vstack([v.T, np.ones(n + 1)])
        edges = v[1:] - v[0]
        volume = abs(np.linalg.det(edges)) / math.factorial(n)
        scale = float(np.max(np.linalg.norm(edges, axis=1))) ** n / math.factorial(n)
        if volume <= PIVOT_TOL * scale:
            raise GeometryError("degenerate simplex")
        self._inverse = np.linalg.inv(system)
        self._measure = volume if measure is None else measure
        i, k = np.triu_indices(n + 1, k=1)
        self._pairs_i = i
        self._pairs_k = k

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def measure(self) -> float:
        return self._measure

    def barycentric(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        flat = np.atleast_2d(p)
        aug = np.hstack([flat, np.ones((len(flat), 1))])
        lam = aug @ self._inverse.T
        return lam[0] if p.ndim == 1 else lam

    def sample(self, rng: np.random.Generator, k: int) -> np.ndarray:
        # normalised exponential spacings are uniform on the probability simplex
        e = rng.standard_exponential((k, self.dim + 1))
        lam = e / e.sum(axis=1, keepdims=True)
        return lam @ self.vertices

    def contains(self, points, tol: float = 1e-12) -> np.ndarray | bool:
        lam = self.barycentric(points)
        inside = np.all(lam >= -tol, axis=-1)
        return bool(inside) if np.ndim(inside) == 0 else inside

    def split_planes(self) -> list[tuple[int, int]]:
        return list(zip(self._pairs_i.tolist(), self._pairs_k.tolist()))

    def bisect(self, plane: tuple[int, int]) -> tuple["Simplex", "Simplex"]:
        i, k = plane
        n1 = self.dim + 1
        if not (0 <= i < k < n1):
            raise GeometryError(f"invalid split edge {plane!r}")
        mid = 0.5 * (self.vertices[i] + self.vertices[k])
        v_minus = self.vertices.copy()
        v_minus[k] = mid
        v_plus = self.vertices.copy()
        v_plus[i] = mid
        half = 0.5 * self._measure
        return Simplex(v_minus, measure=half), Simplex(v_plus, measure=half)

    def sides(self, points) -> np.ndarray:
        lam = np.atleast_2d(self.barycentric(points))
        return lam[:, self._pairs_k] >= lam[:, self._pairs_i]

    def __repr__(self) -> str:
        return f"Simplex(vertices={self.vertices.tolist()})"


Geometry = HyperRectangle | Simplex


def measure(geom: Geometry) -> float:
    return geom.measure


def sample_uniform(geom: Geometry, rng: np.random.Generator, k: int) -> np.ndarray:
    return geom.sample(rng, k)


def contains(geom: Geometry, point) -> bool:
    return geom.contains(point)


def enumerate_split_planes(geom: Geometry) -> list:
    return geom.split_planes()


def bisect(geom: Geometry, plane):
    return geom.bisect(plane)


def barycentric(simplex: Simplex, point) -> np.ndarray:
    return simplex.barycentric(point)


def side_of(geom: Geometry, plane, point) -> int:
    """Return ``MINUS`` or ``PLUS`` for a single point inside ``geom``."""
    if not geom.contains(point):
        raise GeometryError("point lies outside the stratum")
    planes = geom.split_planes()
    try:
        j = planes.index(plane)
    except ValueError:
        raise GeometryError(f"invalid split plane {plane!r}") from None
    return PLUS if geom.sides(point)[0, j] else MINUS


# --- Kuhn tessellations ---------------------------------------------------

def orientation_bits(n: int, index: int) -> tuple[int, ...]:
    """Reflection bits for one of the 2**(n-1) distinct Kuhn tessellations.

    The last coordinate is never reflected: reflecting every axis maps the
    tessellation onto itself.
    """
    if not 0 <= index < 2 ** (n - 1):
        raise GeometryError(f"orientation index {index} out of range for n={n}")
    return tuple((index >> i) & 1 for i in range(n - 1)) + (0,)


def _check_simplex_dim(n: int) -> None:
    if not 1 <= n <= MAX_DIM_SIMPLEX:
        raise GeometryError(f"simplex tessellation dimension {n} out of range [1, {MAX_DIM_SIMPLEX}]")


def kuhn_decomposition(n: int, orientation: Sequence[int] | None = None) -> list[Simplex]:
    """The n! Kuhn simplices of the unit cube, in lexicographic permutation order.

    Simplex ``pi`` has vertices ``v_0 = 0`` and ``v_k = v_{k-1} + e_{pi(k)}``,
    after reflecting every coordinate whose orientation bit is set.
    """
    _check_simplex_dim(n)
    bits = np.zeros(n, dtype=int) if orientation is None else np.asarray(orientation, dtype=int)
    if bits.shape != (n,):
        raise GeometryError("orientation must have one bit per dimension")
    m = 1.0 / math.factorial(n)
    out = []
    for perm in itertools.permutations(range(n)):
        v = np.zeros((n + 1, n))
        for k, axis in enumerate(perm, start=1):
            v[k] = v[k - 1]
            v[k, axis] = 1.0
        v = np.where(bits == 1, 1.0 - v, v)
        out.append(Simplex(v, measure=m))
    return out


def kuhn_index(points, orientation: Sequence[int]) -> np.ndarray:
    """Index into ``kuhn_decomposition(n, orientation)`` of the simplex holding each point."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    n = p.shape[1]
    bits = np.asarray(orientation, dtype=int)
    q = np.where(bits == 1, 1.0 - p, p)
    # simplex pi holds points with q[pi(1)] >= q[pi(2)] >= ...
    order = np.argsort(-q, axis=1, kind="stable")
    lookup = {perm: idx for idx, perm in enumerate(itertools.permutations(range(n)))}
    return np.fromiter((lookup[tuple(row)] for row in order.tolist()), dtype=int, count=len(p))


class TessellationChoice(NamedTuple):
    index: int
    bits: tuple[int, ...]
    simplices: list[Simplex]
    assignment: np.ndarray
    score: float


def select_initial_tessellation(n: int, points, values, alpha: float = 0.0) -> TessellationChoice:
    """Kuhn orientation with the smallest empirical estimator variance.

    Strata with fewer than two samples count as zero spread. Ties go to the
    lowest orientation index.
    """
    from .variance import variance_constant

    _check_simplex_dim(n)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.asarray(values, dtype=float).ravel()
    if len(vals) == 0 or len(pts) != len(vals):
        raise GeometryError("need a nonempty, matched set of points and values")
    m = math.factorial(n)
    p = np.full(m, 1.0 / m)
    best = None
    for idx in range(2 ** (n - 1)):
        bits = orientation_bits(n, idx)
        assign = kuhn_index(pts, bits)
        counts = np.bincount(assign, minlength=m)
        sums = np.bincount(assign, weights=vals, minlength=m)
        mean = np.divide(sums, counts, out=np.zeros(m), where=counts > 0)
        ss = np.bincount(assign, weights=(vals - mean[assign]) ** 2, minlength=m)
        sigma = np.sqrt(np.divide(ss, counts - 1, out=np.zeros(m), where=counts > 1))
        if np.dot(p, sigma) <= 0.0:
            score = 0.0
        else:
            a = alpha if alpha < 1.0 or np.all(sigma > 0) else 0.95
            score = variance_constant(p, sigma, a) / len(vals)
        if best is None or score < best.score:
            best = TessellationChoice(idx, bits, kuhn_decomposition(n, bits), assign, score)
    return best
