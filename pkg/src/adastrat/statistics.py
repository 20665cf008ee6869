"""Running stratum statistics, KDE-smoothed moments and sample-size bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class StratumStats:
    """Count, mean and sum of squared deviations of a sample stream."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def from_values(cls, values) -> "StratumStats":
        v = np.asarray(values, dtype=float).ravel()
        if v.size == 0:
            return cls()
        mu = float(v.mean())
        return cls(int(v.size), mu, float(np.sum((v - mu) ** 2)))

    @property
    def variance(self) -> float:
        """Unbiased sample variance; zero for fewer than two observations."""
        if self.count < 2:
            return 0.0
        return self.m2 / (self.count - 1)

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def update(self, value: float) -> "StratumStats":
        return update(self, value)

    def merge(self, other: "StratumStats") -> "StratumStats":
        return merge(self, other)


def update(stats: StratumStats, value: float) -> StratumStats:
    n = stats.count + 1
    delta = value - stats.mean
    mean = stats.mean + delta / n
    return StratumStats(n, mean, stats.m2 + delta * (value - mean))


def merge(old: StratumStats, new: StratumStats) -> StratumStats:
    if new.count == 0:
        return old
    if old.count == 0:
        return new
    n = old.count + new.count
    delta = new.mean - old.mean
    mean = (old.count * old.mean + new.count * new.mean) / n
    m2 = old.m2 + new.m2 + delta * delta * old.count * new.count / n
    return StratumStats(n, mean, m2)


def merge_arrays(count_a, mean_a, m2_a, count_b, mean_b, m2_b):
    """Element-wise ``merge`` over arrays of (count, mean, m2) triples."""
    n = count_a + count_b
    safe = np.where(n > 0, n, 1)
    delta = mean_b - mean_a
    mean = np.where(n > 0, (count_a * mean_a + count_b * mean_b) / safe, 0.0)
    m2 = m2_a + m2_b + delta * delta * count_a * count_b / safe
    return n, mean, m2


def batch_side_stats(values: np.ndarray, mask: np.ndarray):
    """(count, mean, m2) of ``values`` restricted to each column of ``mask``."""
    w = mask.astype(float)
    count = w.sum(axis=0)
    safe = np.where(count > 0, count, 1.0)
    mean = (values @ w) / safe
    dev = values[:, None] - mean[None, :]
    m2 = np.sum(w * dev * dev, axis=0)
    return count, mean, m2


def variance_from_arrays(count, m2):
    return np.where(count >= 2, m2 / np.maximum(count - 1, 1), 0.0)


# --- kernel density smoothing ----------------------------------------------

@dataclass(frozen=True)
class KdeConfig:
    """Bandwidth rule for the Gaussian-kernel moment estimates.

    With ``fixed`` set, that bandwidth is used as is. Otherwise the bandwidth
    is ``relative`` times the observed range of the samples, never below
    ``floor``.
    """

    fixed: float | None = None
    relative: float = 0.05
    floor: float = 1e-6

    def bandwidth(self, samples) -> float:
        if self.fixed is not None:
            if not self.fixed > 0:
                raise ValueError("bandwidth must be positive")
            return float(self.fixed)
        s = np.asarray(samples, dtype=float)
        spread = float(s.max() - s.min()) if s.size else 0.0
        return max(self.relative * spread, self.floor)


def _resolve_bandwidth(samples, cfg) -> float:
    if isinstance(cfg, KdeConfig):
        return cfg.bandwidth(samples)
    delta = float(cfg)
    if not delta > 0:
        raise ValueError("bandwidth must be positive")
    return delta


def kde_moments(samples, cfg: KdeConfig | float) -> tuple[float, float, float, float]:
    """First four raw moments of the Gaussian KDE of ``samples``."""
    q = np.asarray(samples, dtype=float).ravel()
    if q.size == 0:
        raise ValueError("KDE moments need at least one sample")
    d2 = _resolve_bandwidth(q, cfg) ** 2
    r1 = q.mean()
    r2 = np.mean(q**2)
    r3 = np.mean(q**3)
    r4 = np.mean(q**4)
    return (float(r1), float(r2 + d2), float(r3 + 3 * d2 * r1), float(r4 + 6 * d2 * r2 + 3 * d2 * d2))


def kde_central_moments(samples, cfg: KdeConfig | float) -> tuple[float, float, float]:
    """Mean, variance and fourth central moment of the Gaussian KDE."""
    q = np.asarray(samples, dtype=float).ravel()
    if q.size == 0:
        raise ValueError("KDE moments need at least one sample")
    d2 = _resolve_bandwidth(q, cfg) ** 2
    mu = float(q.mean())
    dev = q - mu
    s2 = float(np.mean(dev**2))
    s4 = float(np.mean(dev**4))
    return mu, s2 + d2, s4 + 6 * d2 * s2 + 3 * d2 * d2


def kde_kurtosis(samples, cfg: KdeConfig | float) -> float:
    """Kurtosis of the Gaussian KDE; equals 3 for constant samples.

    Computed as ``3 + (s4 - 3 s2^2) / (s2 + delta^2)^2`` with central sample
    moments ``s2, s4``. This is algebraically the raw-moment combination but
    does not cancel catastrophically when the samples are nearly constant.
    """
    q = np.asarray(samples, dtype=float).ravel()
    if q.size == 0:
        raise ValueError("KDE kurtosis needs at least one sample")
    d2 = _resolve_bandwidth(q, cfg) ** 2
    dev = q - q.mean()
    s2 = float(np.mean(dev**2))
    s4 = float(np.mean(dev**4))
    return 3.0 + (s4 - 3.0 * s2 * s2) / (s2 + d2) ** 2


# --- variance underestimation ---------------------------------------------

def underestimation_bound(n_samples: int, kurtosis: float, theta: float) -> float:
    """Upper bound on P(sample variance <= theta * true variance)."""
    if n_samples < 2:
        raise ValueError("need at least two samples")
    if kurtosis < 1:
        raise ValueError("kurtosis is at least 1")
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    a = kurtosis - (n_samples - 3) / (n_samples - 1)
    return a / (n_samples * (1.0 - theta) ** 2 + a)


def required_samples(kurtosis: float, theta: float, p_crit: float) -> int:
    """Smallest N >= 2 whose underestimation bound does not exceed ``p_crit``."""
    if not 0.0 < p_crit <= 1.0:
        raise ValueError("p_crit must lie in (0, 1]")
    if not 0.0 <= theta < 1.0:
        raise ValueError("theta must lie in [0, 1); theta = 1 is infeasible")

    def ok(n):
        return underestimation_bound(n, kurtosis, theta) <= p_crit

    if ok(2):
        return 2
    lo, hi = 2, 4
    while not ok(hi):
        lo, hi = hi, hi * 2
    # bound is decreasing in N: bisect on (lo, hi]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


class ProbabilityBound(NamedTuple):
    value: float
    vacuous: bool


def concentration_bound_prop(p, M, vartheta: float, n_total: int) -> ProbabilityBound:
    """Tail bound for the proportional-allocation variance estimator."""
    p = np.asarray(p, dtype=float)
    M = np.asarray(M, dtype=float)
    if np.any(M < 0) or vartheta <= 0 or n_total < 1:
        raise ValueError("need M >= 0, vartheta > 0, N >= 1")
    denom = float(np.sum(p**2 * M**4))
    if denom == 0.0:
        return ProbabilityBound(0.0, False)
    value = 2.0 * math.exp(-2.0 * vartheta**2 * n_total**2 / denom)
    return ProbabilityBound(value, value > 1.0)


def estimator_bias(p, sigma, b) -> float:
    """Bias term of the optimal-allocation variance estimator (sum over S != T)."""
    p = np.asarray(p, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    b = np.asarray(b, dtype=float)
    pb, ps = p * b, p * sigma
    full = pb.sum() ** 2 + 2 * pb.sum() * ps.sum()
    diag = np.sum(pb * pb + 2 * pb * ps)
    return float(full - diag)


def concentration_bound_opt(p, M, sigma, b, vartheta: float, n_total: int) -> ProbabilityBound:
    """Tail bound for the optimal-allocation variance estimator."""
    p = np.asarray(p, dtype=float)
    M = np.asarray(M, dtype=float)
    bias = estimator_bias(p, sigma, b)
    if not vartheta > abs(bias) / n_total:
        raise ValueError(f"vartheta must exceed |B|/N = {abs(bias) / n_total:g}")
    scale = float(np.sum(p * M)) ** 4
    if scale == 0.0:
        return ProbabilityBound(0.0, False)
    value = 2.0 * math.exp(-2.0 * (abs(bias) - vartheta * n_total) ** 2 / scale)
    return ProbabilityBound(value, value > 1.0)
