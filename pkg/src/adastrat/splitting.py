"""Greedy variance-minimising refinement of a stratification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .strata import Stratification, StratumRecord
from .variance import variance_constant

DEFAULT_ALPHA_MAX = 0.95


@dataclass(frozen=True)
class SplitCandidate:
    stratum_index: int
    stratum_id: int
    plane: object
    plane_index: int
    score: float


def record_sample(record: StratumRecord, point, value: float) -> None:
    """Add one observation to a stratum, its statistics and its split table."""
    point = np.asarray(point, dtype=float)
    if not record.geom.contains(point):
        raise ValueError("point lies outside the stratum")
    record.points = np.vstack([record.points, point[None, :]])
    record.values = np.append(record.values, value)
    record.stats = record.stats.update(value)
    record.table.record_sample(record.geom, point, value)


def _safe_constant(p, sigma, alpha):
    if float(np.dot(p, sigma)) <= 0.0:
        return 0.0
    return variance_constant(p, sigma, alpha)


def split_scores(p, sigma, t_index, sigma_minus, sigma_plus, alpha: float,
                 alpha_max: float = DEFAULT_ALPHA_MAX) -> np.ndarray:
    """Reduction ``N (V(S) - V(S_[T]))`` for a batch of candidate bisections.

    ``t_index``, ``sigma_minus`` and ``sigma_plus`` are arrays over
    candidates; ``p`` and ``sigma`` describe the current stratification.
    """
    p = np.asarray(p, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    t = np.atleast_1d(np.asarray(t_index, dtype=int))
    sm = np.atleast_1d(np.asarray(sigma_minus, dtype=float))
    sp = np.atleast_1d(np.asarray(sigma_plus, dtype=float))

    if alpha >= 1.0 and (np.any(sigma == 0.0) or np.any(sm == 0.0) or np.any(sp == 0.0)):
        alpha = alpha_max

    ps = p * sigma
    a_old = float(ps.sum())
    p_t, s_t = p[t], sigma[t]
    a_rest = np.maximum(a_old - ps[t], 0.0)
    a_new = a_rest + 0.5 * p_t * (sm + sp)

    scores = np.empty(len(t))
    if a_old <= 0.0:
        # parent stratification has zero variance; refinements cannot do better
        for c in range(len(t)):
            if a_new[c] <= 0.0:
                scores[c] = 0.0
            else:
                p_ref = np.concatenate([np.delete(p, t[c]), [0.5 * p_t[c]] * 2])
                s_ref = np.concatenate([np.delete(sigma, t[c]), [sm[c], sp[c]]])
                scores[c] = -variance_constant(p_ref, s_ref, alpha)
        return scores

    c_old = variance_constant(p, sigma, alpha)
    zero_new = a_new <= 0.0
    a_new_safe = np.where(zero_new, 1.0, a_new)

    d_t = 1.0 + alpha * (s_t / a_old - 1.0)
    d_minus = 1.0 + alpha * (sm / a_new_safe - 1.0)
    d_plus = 1.0 + alpha * (sp / a_new_safe - 1.0)
    term1 = p_t * (s_t**2 / d_t - 0.5 * (sm**2 / d_minus + sp**2 / d_plus))

    term2 = np.zeros(len(t))
    if alpha != 0.0:
        d_all = 1.0 + alpha * (sigma / a_old - 1.0)                       # (S,)
        d_all_new = 1.0 + alpha * (sigma[None, :] / a_new_safe[:, None] - 1.0)  # (C, S)
        shift = sigma[None, :] / a_new_safe[:, None] - sigma[None, :] / a_old
        contrib = (p * sigma**2)[None, :] * shift / (d_all[None, :] * d_all_new)
        contrib[np.arange(len(t)), t] = 0.0
        term2 = alpha * contrib.sum(axis=1)

    scores[:] = term1 + term2
    scores[zero_new] = c_old
    return scores


def score_split(p, sigma, t_index: int, sigma_minus: float, sigma_plus: float, alpha: float,
                alpha_max: float = DEFAULT_ALPHA_MAX) -> float:
    """Variance reduction (times N) from bisecting stratum ``t_index``."""
    return float(split_scores(p, sigma, [t_index], [sigma_minus], [sigma_plus], alpha, alpha_max)[0])


def score_split_prop(p_t: float, sigma_t: float, sigma_minus: float, sigma_plus: float) -> float:
    """Proportional-allocation special case."""
    return p_t * (sigma_t**2 - 0.5 * (sigma_minus**2 + sigma_plus**2))


def score_split_opt(p, sigma, t_index: int, sigma_minus: float, sigma_plus: float) -> float:
    """Optimal-allocation special case."""
    p = np.asarray(p, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    p_t, s_t = p[t_index], sigma[t_index]
    rest = float(np.dot(p, sigma)) - p_t * s_t
    gap = 0.5 * (sigma_minus + sigma_plus) - s_t
    return -p_t * gap * (p_t * s_t + 2.0 * rest) - p_t**2 * gap * 0.5 * (sigma_minus + sigma_plus)


def select_split(strat: Stratification, alpha: float, min_samples: int,
                 alpha_max: float = DEFAULT_ALPHA_MAX, rel_tie: float = 1e-12) -> SplitCandidate | None:
    """Best (stratum, plane) bisection, or None if nothing reduces the variance.

    Only strata with at least ``min_samples`` samples are considered. Scores
    within ``rel_tie`` of the best are ties, resolved by stratum order and
    then plane order.
    """
    if min_samples < 2:
        raise ValueError("min_samples must be at least 2")
    p = strat.measures()
    sigma = strat.stds()
    t_idx, planes, sm, sp = [], [], [], []
    for i, rec in enumerate(strat.strata):
        if rec.count < min_samples:
            continue
        stds = rec.table.stds()
        ok = np.all(rec.table.count >= 2, axis=1)
        stds = np.where(ok[:, None], stds, np.nan)
        t_idx.extend([i] * len(stds))
        planes.extend(range(len(stds)))
        sm.extend(stds[:, 0])
        sp.extend(stds[:, 1])
    if not t_idx:
        return None
    scores = split_scores(p, sigma, t_idx, sm, sp, alpha, alpha_max)
    # planes with fewer than two samples on a side have no usable estimate
    scores = np.where(np.isnan(scores), -np.inf, scores)
    best = float(scores.max())
    if not best > 0.0:
        return None
    c = int(np.flatnonzero(scores >= best - rel_tie * abs(best))[0])
    rec = strat.strata[t_idx[c]]
    j = planes[c]
    return SplitCandidate(t_idx[c], rec.id, rec.geom.split_planes()[j], j, float(scores[c]))


def execute_split(strat: Stratification, cand: SplitCandidate) -> Stratification:
    """Replace the candidate's stratum by its two halves, moving its samples."""
    i = cand.stratum_index
    parent = strat.strata[i]
    g_minus, g_plus = parent.geom.bisect(cand.plane)
    plus = parent.geom.sides(parent.points)[:, cand.plane_index] if parent.count else np.zeros(0, bool)
    stats_minus, stats_plus = parent.table.pair(cand.plane_index)
    children = []
    for geom, mask, stats in ((g_minus, ~plus, stats_minus), (g_plus, plus, stats_plus)):
        child = StratumRecord.build(strat.new_id(), geom, parent.points[mask], parent.values[mask])
        child.stats = stats
        children.append(child)
    strat.strata[i:i + 1] = children
    return strat
