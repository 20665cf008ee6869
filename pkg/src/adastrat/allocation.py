"""Hybrid allocation rates and integer per-iteration sample plans."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

# guards ceil() against round-off such as 10.000000000000002
_CEIL_SLACK = 1e-9


@dataclass(frozen=True)
class HybridParameter:
    alpha: float
    alpha_max: float = 0.95

    def __post_init__(self):
        if not 0.0 <= self.alpha_max <= 1.0:
            raise ValueError("alpha_max must lie in [0, 1]")
        if not 0.0 <= self.alpha <= self.alpha_max:
            raise ValueError(f"alpha must lie in [0, {self.alpha_max}]")


@dataclass(frozen=True)
class AllocationPlan:
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def target_rates(p, sigma_hat, alpha: float) -> np.ndarray:
    """Asymptotic sampling rates ``(1 - alpha) p_S + alpha p_S sigma_S / <p, sigma>``.

    Falls back to proportional rates when every stratum has zero spread.
    """
    p = np.asarray(p, dtype=float)
    sigma = np.asarray(sigma_hat, dtype=float)
    if alpha == 0.0:
        return p.copy()
    mean_sigma = float(np.dot(p, sigma))
    if mean_sigma <= 0.0:
        log.debug("all strata have zero spread; using proportional rates")
        return p.copy()
    return (1.0 - alpha) * p + alpha * p * sigma / mean_sigma


def _ceil(x):
    return np.ceil(np.asarray(x) - _CEIL_SLACK).astype(np.int64)


def _truncate(counts, protected, target, current, budget, floor=None):
    """Drop samples until ``counts.sum() <= budget``.

    Each removal takes one sample from the stratum whose remaining deficit
    ``target - current - removable`` is smallest; ties drop from the highest
    index. ``protected`` samples per stratum are never removed. Samples below
    the soft ``floor`` are only removed once nothing above it is left.
    """
    counts = counts.copy()
    excess = int(counts.sum()) - budget
    if excess <= 0:
        return counts
    keep = protected if floor is None else np.maximum(protected, np.minimum(floor, counts))
    for level in (keep, protected):
        removable = counts - level
        deficit = target - current - removable
        while excess > 0:
            cand = np.flatnonzero(removable > 0)
            if cand.size == 0:
                break
            d = deficit[cand]
            best = cand[d == d.min()][-1]
            removable[best] -= 1
            counts[best] -= 1
            deficit[best] += 1.0
            excess -= 1
    return counts


def sequential_counts(q, n_current, n_total: int, n_new: int, cap: int | None = None,
                      floor=None) -> AllocationPlan:
    """New samples per stratum so that ``N_S`` tracks ``q_S (N_total + N_new)``.

    Oversampled strata make the rule ask for more than ``n_new`` in total;
    the plan is then truncated to ``cap`` (default ``n_new``), sparing the
    per-stratum ``floor`` as long as possible. A stratum that has never been
    sampled keeps at least one new sample whenever the rule assigns it any.
    """
    q = np.asarray(q, dtype=float)
    cur = np.asarray(n_current, dtype=np.int64)
    if n_new < 0:
        raise ValueError("n_new must be non-negative")
    target = (n_total + n_new) * q
    raw = np.maximum(0, np.minimum(_ceil(target - cur), n_new))
    cap = n_new if cap is None else cap
    protected = np.where((cur == 0) & (raw > 0), 1, 0)
    if protected.sum() > cap:
        protected[:] = 0
    return AllocationPlan(_truncate(raw, protected, target, cur, cap, floor))


def sequential_counts_reserve_one(q, n_current, n_total: int, n_new: int, n_strata: int | None = None,
                                  cap: int | None = None, floor=None) -> AllocationPlan:
    """Like ``sequential_counts`` but every stratum gets at least one sample."""
    q = np.asarray(q, dtype=float)
    cur = np.asarray(n_current, dtype=np.int64)
    n_strata = len(q) if n_strata is None else n_strata
    if n_new < n_strata:
        raise ValueError(f"reserve-one allocation needs n_new >= {n_strata}, got {n_new}")
    spare = n_new - n_strata
    target = (n_total + spare) * q
    extra = np.maximum(0, np.minimum(_ceil(target - cur), spare))
    counts = 1 + extra
    cap = n_new if cap is None else max(cap, n_strata)
    return AllocationPlan(_truncate(counts, np.ones_like(counts), target, cur, cap, floor))


def proportional_floor(p, n_current, n_total: int, n_new: int, alpha: float) -> np.ndarray:
    """Samples still owed to each stratum under the proportional part ``(1 - alpha) p_S`` of the rates."""
    p = np.asarray(p, dtype=float)
    cur = np.asarray(n_current, dtype=np.int64)
    return np.maximum(0, _ceil((1.0 - alpha) * p * (n_total + n_new) - cur))


def batch_size(n_strata: int, c: int, remaining: int | None = None) -> int:
    """``c`` new samples per stratum on average, clipped to the remaining budget."""
    if c < 1 or n_strata < 1:
        raise ValueError("need c >= 1 and at least one stratum")
    n_new = c * n_strata
    if remaining is not None:
        n_new = min(n_new, max(0, remaining))
    return n_new
