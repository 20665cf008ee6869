"""Estimator-variance analytics for hybrid proportional/optimal allocation.

All functions take strata measures ``p`` and standard deviations ``sigma``
as arrays. ``alpha`` interpolates between proportional (0) and optimal (1)
allocation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import normal_quantile


class DegenerateVarianceError(ValueError):
    """``alpha * sigma_S + (1 - alpha) <p, sigma>`` vanishes for some stratum."""


@dataclass(frozen=True)
class StrataSummary:
    p: np.ndarray
    sigma: np.ndarray
    kappa: np.ndarray | None = None
    n: int = 1

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        if self.kappa is not None:
            object.__setattr__(self, "kappa", np.asarray(self.kappa, dtype=float))
        if abs(self.p.sum() - 1.0) > 1e-12:
            raise ValueError("strata measures must sum to 1")
        if np.any(self.sigma < 0):
            raise ValueError("standard deviations must be non-negative")

    def v_prop(self) -> float:
        return v_prop_hat(self.p, self.sigma, self.n)

    def v_opt(self) -> float:
        return v_opt_hat(self.p, self.sigma, self.n)

    def variance_constant(self, alpha: float) -> float:
        return variance_constant(self.p, self.sigma, alpha)


def v_prop_hat(p, sigma, n_total: int) -> float:
    p = np.asarray(p, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    return float(np.sum(p * sigma**2)) / n_total


def v_opt_hat(p, sigma, n_total: int) -> float:
    p = np.asarray(p, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    return float(np.sum(p * sigma)) ** 2 / n_total


def _denominators(p, sigma, alpha):
    mean_sigma = float(np.dot(p, sigma))
    denom = alpha * sigma + (1.0 - alpha) * mean_sigma
    if np.any(denom <= 0.0):
        bad = np.flatnonzero(denom <= 0.0)
        raise DegenerateVarianceError(
            f"alpha={alpha:g} with <p,sigma>={mean_sigma:g}: zero allocation rate in strata {bad[:5].tolist()}"
        )
    return mean_sigma, denom


def variance_constant(p, sigma, alpha: float) -> float:
    """N times the hybrid estimator variance."""
    p = np.asarray(p, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    mean_sigma, denom = _denominators(p, sigma, alpha)
    return mean_sigma * float(np.sum(p * sigma**2 / denom))


def effective_alpha(sigma, alpha: float, alpha_max: float = 0.95) -> float:
    """Replace alpha = 1 by ``alpha_max`` when some stratum has zero spread."""
    sigma = np.asarray(sigma, dtype=float)
    if alpha >= 1.0 and np.any(sigma == 0.0):
        return alpha_max
    return alpha


def variance_constant_gradient(p, sigma, alpha: float) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    a, e = _denominators(p, sigma, alpha)
    first = p * sigma * a / e * (1.0 + (1.0 - alpha) * a / e)
    second = alpha * p * float(np.sum(p * sigma**3 / e**2))
    return first + second


def fluctuation_covariance(p, sigma, kappa, alpha: float) -> np.ndarray:
    """Diagonal of the asymptotic covariance of the empirical standard deviations."""
    p = np.asarray(p, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 1.0):
        raise ValueError("kurtosis is at least 1")
    a, e = _denominators(p, sigma, alpha)
    diag = sigma**2 * (kappa - 1.0) * a / (4.0 * p * e)
    return np.where(sigma == 0.0, 0.0, diag)


def fluctuation_variance(p, sigma, kappa, alpha: float) -> float:
    g = variance_constant_gradient(p, sigma, alpha)
    return float(np.sum(g * g * fluctuation_covariance(p, sigma, kappa, alpha)))


def estimator_variance(p, sigma, counts) -> float:
    """sum_S p_S^2 sigma_S^2 / N_S for a concrete allocation."""
    p = np.asarray(p, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if np.any(counts <= 0):
        raise ValueError("every stratum needs at least one sample")
    return float(np.sum(p**2 * sigma**2 / counts))


def confidence_interval(q_hat: float, v_hat: float, coverage: float = 0.95) -> tuple[float, float]:
    if v_hat < 0:
        raise ValueError("variance estimate must be non-negative")
    if not 0.0 < coverage < 1.0:
        raise ValueError("coverage must lie in (0, 1)")
    half = float(normal_quantile(0.5 * (1.0 + coverage))) * math.sqrt(v_hat)
    return q_hat - half, q_hat + half


def speedup(var_q: float, c_alpha: float) -> float:
    """Variance ratio of plain Monte Carlo to the stratified estimator.

    Returns ``inf`` when the stratified variance constant vanishes.
    """
    if c_alpha < 0:
        raise ValueError("variance constant must be non-negative")
    if c_alpha == 0.0:
        return math.inf
    return var_q / c_alpha


def _hybrid_factor(alpha: float) -> float:
    inv_a = math.inf if alpha == 0 else 1.0 / alpha
    inv_b = math.inf if alpha == 1 else 1.0 / (1.0 - alpha)
    return min(inv_a, inv_b)


def cartesian_bound_smooth(n: int, grad_sup_sq: float, strata_count: int, n_total: int, alpha: float) -> float:
    """Variance bound on a uniform Cartesian grid for continuously differentiable f."""
    if grad_sup_sq < 0 or strata_count < 1:
        raise ValueError("need C >= 0 and at least one stratum")
    base = n * grad_sup_sq / (3.0 * n_total) * strata_count ** (-2.0 / n)
    return base * _hybrid_factor(alpha)


def cartesian_bound_jump(delta: float, t_count: int, s_count: int, n_total: int, alpha: float) -> float:
    """Variance bound on a uniform Cartesian grid for a jump of height ``delta``.

    ``t_count`` strata out of ``s_count`` intersect the discontinuity.
    """
    if not 0 <= t_count <= s_count or delta <= 0:
        raise ValueError("need 0 <= |T| <= |S| and delta > 0")
    gamma = t_count / s_count
    base = delta**2 / (4.0 * n_total)
    if alpha == 0:
        return base * gamma
    if alpha == 1:
        return base * gamma**2
    return base * gamma * min(1.0 / (1.0 - alpha), gamma / alpha)
