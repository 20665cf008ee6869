"""Core value types: marginal distributions, parameter maps, model wrappers
and reproducible random streams.

Everything downstream works on the unit hypercube. Physical parameters are
recovered with the inverse probability integral transform, one independent
marginal per coordinate.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri


class DomainError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


def normal_quantile(u):
    """Standard normal quantile, vectorised."""
    return ndtri(u)


@dataclass(frozen=True)
class MarginalDistribution:
    """One-dimensional input distribution.

    ``kind`` is one of ``"uniform"``, ``"lognormal"``, ``"exponential"``.
    Parameters are ``(a, b)``, ``(mu, sigma)`` of the underlying normal, and
    ``(mean,)`` respectively.
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.kind == "uniform":
            a, b = self.params
            if not a < b:
                raise ValueError(f"uniform requires a < b, got ({a}, {b})")
        elif self.kind == "lognormal":
            _, sigma = self.params
            if not sigma > 0:
                raise ValueError(f"lognormal requires sigma > 0, got {sigma}")
        elif self.kind == "exponential":
            (mean,) = self.params
            if not mean > 0:
                raise ValueError(f"exponential requires mean > 0, got {mean}")
        else:
            raise ValueError(f"unknown marginal kind {self.kind!r}")

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        if np.any((u < 0.0) | (u > 1.0)) or np.any(np.isnan(u)):
            raise DomainError("quantile level must lie in [0, 1]")
        if self.kind == "uniform":
            a, b = self.params
            return a + (b - a) * u
        if self.kind == "lognormal":
            mu, sigma = self.params
            with np.errstate(over="ignore"):
                return np.exp(mu + sigma * normal_quantile(u))
        (mean,) = self.params
        with np.errstate(divide="ignore"):
            return -mean * np.log1p(-u)

    def mean(self) -> float:
        if self.kind == "uniform":
            a, b = self.params
            return 0.5 * (a + b)
        if self.kind == "lognormal":
            mu, sigma = self.params
            return math.exp(mu + 0.5 * sigma**2)
        return self.params[0]

    def variance(self) -> float:
        if self.kind == "uniform":
            a, b = self.params
            return (b - a) ** 2 / 12.0
        if self.kind == "lognormal":
            mu, sigma = self.params
            return (math.exp(sigma**2) - 1.0) * math.exp(2 * mu + sigma**2)
        return self.params[0] ** 2


def uniform(a: float, b: float) -> MarginalDistribution:
    return MarginalDistribution("uniform", (float(a), float(b)))


def lognormal(mu: float, sigma: float, moments: bool = False) -> MarginalDistribution:
    """Lognormal marginal.

    By default ``(mu, sigma)`` are the mean and standard deviation of the
    underlying normal. With ``moments=True`` they are read as the mean and
    standard deviation of the lognormal variable itself and converted.
    """
    if moments:
        if not (mu > 0 and sigma > 0):
            raise ValueError("lognormal moments require positive mean and std")
        s2 = math.log1p((sigma / mu) ** 2)
        return MarginalDistribution("lognormal", (math.log(mu) - 0.5 * s2, math.sqrt(s2)))
    return MarginalDistribution("lognormal", (float(mu), float(sigma)))


def exponential(mean: float) -> MarginalDistribution:
    return MarginalDistribution("exponential", (float(mean),))


def inverse_cdf(marginal: MarginalDistribution, u):
    return marginal.ppf(u)


@dataclass(frozen=True)
class ParameterMap:
    """Product of independent marginals, one per unit-cube coordinate."""

    marginals: tuple[MarginalDistribution, ...]

    @property
    def dim(self) -> int:
        return len(self.marginals)

    def __call__(self, u):
        return map_point(self, u)


def map_point(pm: ParameterMap, u):
    """Map unit-cube points (shape ``(n,)`` or ``(k, n)``) to physical values."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != pm.dim:
        raise ValueError(f"point has dimension {u.shape[-1]}, map expects {pm.dim}")
    cols = [m.ppf(u[..., i]) for i, m in enumerate(pm.marginals)]
    return np.stack(cols, axis=-1)


class ModelFunction:
    """Deterministic model on the unit hypercube with an evaluation counter.

    ``func`` receives a ``(k, n)`` array of unit-cube points and must return
    ``k`` values. The counter is shared between threads.
    """

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], dim: int, name: str = ""):
        self.func = func
        self.dim = dim
        self.name = name
        self._count = 0
        self._lock = threading.Lock()

    @property
    def evaluations(self) -> int:
        return self._count

    def reset(self) -> None:
        with self._lock:
            self._count = 0

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise ValueError(f"model expects dimension {self.dim}, got {pts.shape[1]}")
        values = np.asarray(self.func(pts), dtype=float).reshape(len(pts))
        with self._lock:
            self._count += len(pts)
        return values


@dataclass(frozen=True)
class RandomSource:
    """Seeded family of independent streams keyed by (stratum id, iteration).

    Streams come from a Philox counter-based generator whose key is derived
    from the triple through ``SeedSequence`` hashing, so the draw order across
    strata never affects the numbers any single stratum receives.
    """

    seed: int

    def stream(self, stratum_id: int, iteration: int) -> np.random.Generator:
        ss = np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, int(stratum_id), int(iteration)])
        return np.random.Generator(np.random.Philox(ss))

    def unit_points(self, stratum_id: int, iteration: int, k: int, n: int) -> np.ndarray:
        return self.stream(stratum_id, iteration).random((k, n))


def product_map(marginals: Sequence[MarginalDistribution]) -> ParameterMap:
    return ParameterMap(tuple(marginals))
