"""Iteration-by-iteration choice of the hybrid allocation parameter."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class AlphaSchedule:
    """Fixed or dynamic hybrid parameter with its history.

    In dynamic mode ``alpha`` is the starting value and each update picks the
    smallest grid value whose upper-confidence objective lies within a
    ``(1 - tau)`` relative band of the grid minimum.
    """

    mode: str = "fixed"
    alpha: float = 0.0
    tau: float = 0.5
    alpha_max: float = 0.95
    step: float = 0.01
    history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.mode not in ("fixed", "dynamic"):
            raise ValueError(f"unknown alpha mode {self.mode!r}")
        if not 0.0 <= self.alpha <= self.alpha_max <= 1.0:
            raise ValueError("need 0 <= alpha <= alpha_max <= 1")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")

    @classmethod
    def fixed(cls, alpha: float, alpha_max: float = 0.95) -> "AlphaSchedule":
        return cls("fixed", alpha, alpha_max=max(alpha_max, alpha))

    @classmethod
    def dynamic(cls, tau: float = 0.5, alpha_max: float = 0.95, step: float = 0.01) -> "AlphaSchedule":
        return cls("dynamic", 0.0, tau=tau, alpha_max=alpha_max, step=step)

    @property
    def current(self) -> float:
        return self.history[-1] if self.history else self.alpha

    def grid(self) -> np.ndarray:
        m = int(math.floor(self.alpha_max / self.step + 1e-9))
        return np.round(np.arange(m + 1) * self.step, 12)


def _objective_grid(p, sigma, kappa, n_total, alphas):
    """C_alpha + varsigma_alpha / sqrt(N) on a grid; NaN where undefined."""
    p = np.asarray(p, dtype=float)[None, :]
    s = np.asarray(sigma, dtype=float)[None, :]
    k = np.asarray(kappa, dtype=float)[None, :]
    a = np.asarray(alphas, dtype=float)[:, None]
    mean_sigma = float(np.sum(p * s))
    e = a * s + (1.0 - a) * mean_sigma
    valid = np.all(e > 0.0, axis=1)
    e = np.where(e > 0.0, e, 1.0)
    c = mean_sigma * np.sum(p * s**2 / e, axis=1)
    grad = p * s * mean_sigma / e * (1.0 + (1.0 - a) * mean_sigma / e) \
        + a * p * np.sum(p * s**3 / e**2, axis=1, keepdims=True)
    cov = np.where(s == 0.0, 0.0, s**2 * (k - 1.0) * mean_sigma / (4.0 * p * e))
    fluct = np.sum(grad**2 * cov, axis=1)
    j = c + np.sqrt(fluct) / math.sqrt(n_total)
    return np.where(valid, j, np.nan)


def objective_j(p, sigma, kappa, n_total: int, alpha: float) -> float:
    """Upper one-sigma band of the empirical variance constant."""
    from .variance import fluctuation_variance, variance_constant

    c = variance_constant(p, sigma, alpha)
    return c + math.sqrt(fluctuation_variance(p, sigma, kappa, alpha)) / math.sqrt(n_total)


def update_alpha(p, sigma, kappa, n_total: int, schedule: AlphaSchedule) -> float:
    """Next alpha from the grid; 0 when no grid value is admissible."""
    if schedule.mode != "dynamic":
        return schedule.alpha
    alphas = schedule.grid()
    j = _objective_grid(p, sigma, kappa, n_total, alphas)
    ok = np.isfinite(j)
    if not ok.any():
        return 0.0
    j_star = float(np.min(j[ok]))
    admissible = ok & (j - j_star <= (1.0 - schedule.tau) * j_star + 1e-12 * abs(j_star))
    if not admissible.any():
        return 0.0
    return float(alphas[np.flatnonzero(admissible)[0]])
