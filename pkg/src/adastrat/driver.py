"""Adaptive stratified sampling loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .allocation import batch_size, proportional_floor, sequential_counts, sequential_counts_reserve_one, target_rates
from .alpha_control import AlphaSchedule, update_alpha
from .domain import ModelFunction, RandomSource
from .geometry import HyperRectangle, select_initial_tessellation
from .splitting import execute_split, select_split
from .statistics import KdeConfig, kde_central_moments, kde_kurtosis
from .strata import Stratification, StratumRecord

log = logging.getLogger(__name__)


@dataclass
class SamplerConfig:
    """Run parameters.

    ``alpha`` is a number in ``[0, alpha_max]`` or the string ``"dynamic"``.
    ``n_init`` defaults to ``max(30, 10 n)``, ``min_samples`` to
    ``max(4, 2 c)`` and ``reserve_one`` to ``alpha > 0.5`` (always on for the
    dynamic schedule).
    """

    dim: int
    n_max: int
    geometry: str = "hyperrect"
    alpha: float | str = 0.0
    tau: float = 0.5
    alpha_max: float = 0.95
    alpha_step: float = 0.01
    c: int = 10
    seed: int = 0
    n_init: int | None = None
    min_samples: int | None = None
    reserve_one: bool | None = None
    split: bool = True
    batch_cap: bool = True
    keep_proportional: bool = True
    kde: KdeConfig = field(default_factory=KdeConfig)

    def __post_init__(self):
        if self.geometry not in ("hyperrect", "simplex"):
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.c < 1:
            raise ValueError("c must be at least 1")
        if self.n_max < self.initial_batch:
            raise ValueError(f"budget {self.n_max} is smaller than the initial batch {self.initial_batch}")
        if self.alpha != "dynamic" and not 0.0 <= float(self.alpha) <= self.alpha_max:
            raise ValueError(f"fixed alpha must lie in [0, {self.alpha_max}]")

    @property
    def initial_batch(self) -> int:
        return self.n_init if self.n_init is not None else max(30, 10 * self.dim)

    @property
    def min_split_samples(self) -> int:
        return self.min_samples if self.min_samples is not None else max(4, 2 * self.c)

    @property
    def dynamic(self) -> bool:
        return self.alpha == "dynamic"

    @property
    def use_reserve_one(self) -> bool:
        if self.reserve_one is not None:
            return self.reserve_one
        return self.dynamic or float(self.alpha) > 0.5

    def schedule(self) -> AlphaSchedule:
        if self.dynamic:
            return AlphaSchedule.dynamic(self.tau, self.alpha_max, self.alpha_step)
        return AlphaSchedule.fixed(float(self.alpha), self.alpha_max)


@dataclass(frozen=True)
class IterationRow:
    iteration: int
    n_total: int
    n_strata: int
    split: bool
    v_hat: float
    alpha: float


@dataclass
class RunReport:
    estimate: float
    v_hat: float
    n_strata: int
    alpha_history: list[float]
    rows: list[IterationRow]
    evaluations: int
    stratification: Stratification | None = None

    @property
    def alpha_final(self) -> float:
        return self.alpha_history[-1] if self.alpha_history else 0.0


class SamplerAborted(RuntimeError):
    """Model evaluation failed; ``report`` holds the state before the failing batch."""

    def __init__(self, message: str, report: RunReport):
        super().__init__(message)
        self.report = report


def initialize(config: SamplerConfig, model: ModelFunction, source: RandomSource | None = None) -> Stratification:
    """Evaluate the initial batch and build the starting strata."""
    source = source or RandomSource(config.seed)
    n, k = config.dim, config.initial_batch
    points = source.unit_points(0, 0, k, n)
    values = model(points)
    if config.geometry == "hyperrect":
        strata = [StratumRecord.build(0, HyperRectangle.unit(n), points, values)]
    else:
        choice = select_initial_tessellation(n, points, values, 0.0)
        strata = [StratumRecord.build(i, g, points[choice.assignment == i], values[choice.assignment == i])
                  for i, g in enumerate(choice.simplices)]
        log.debug("initial tessellation orientation %d (score %.3g)", choice.index, choice.score)
    return Stratification(n, config.geometry, strata)


def estimator_variance_hat(strat: Stratification) -> float:
    p, counts, sigma = strat.measures(), strat.counts(), strat.stds()
    return float(np.sum(p**2 * sigma**2 / counts))


def _alpha_inputs(strat: Stratification, kde: KdeConfig):
    """Strata std devs and KDE kurtoses used by the dynamic alpha update.

    A stratum whose plain std is zero gets the KDE std instead. Without an
    explicit bandwidth, the floor scales with the range over all strata.
    """
    lo = min(float(r.values.min()) for r in strat.strata if r.count)
    hi = max(float(r.values.max()) for r in strat.strata if r.count)
    floor = kde.floor * (hi - lo) if hi > lo else kde.floor
    sigma, kappa = strat.stds(), np.empty(len(strat))
    for i, rec in enumerate(strat.strata):
        cfg = kde if kde.fixed is not None else max(kde.relative * float(np.ptp(rec.values)), floor)
        kappa[i] = kde_kurtosis(rec.values, cfg)
        if sigma[i] == 0.0:
            sigma[i] = float(np.sqrt(kde_central_moments(rec.values, cfg)[1]))
    return sigma, kappa


def iterate(strat: Stratification, model: ModelFunction, config: SamplerConfig,
            schedule: AlphaSchedule, source: RandomSource) -> IterationRow | None:
    """One split/allocate/evaluate/update step; None if the budget is spent."""
    remaining = config.n_max - strat.n_total
    if remaining <= 0:
        return None
    k = strat.iteration + 1
    alpha = schedule.current

    split = False
    if config.split:
        cand = select_split(strat, alpha, config.min_split_samples, config.alpha_max)
        if cand is not None:
            execute_split(strat, cand)
            split = True

    n_new = batch_size(len(strat), config.c, remaining)
    counts = strat.counts()
    q = target_rates(strat.measures(), strat.stds(), alpha)
    cap = n_new if config.batch_cap else remaining
    floor = proportional_floor(strat.measures(), counts, strat.n_total, n_new, alpha) \
        if config.keep_proportional else None
    if config.use_reserve_one and n_new >= len(strat):
        plan = sequential_counts_reserve_one(q, counts, strat.n_total, n_new, cap=cap, floor=floor)
    else:
        plan = sequential_counts(q, counts, strat.n_total, n_new, cap=cap, floor=floor)

    chunks = [(rec, rec.geom.sample(source.stream(rec.id, k), int(m)))
              for rec, m in zip(strat.strata, plan.counts) if m > 0]
    values = model(np.concatenate([pts for _, pts in chunks]))
    start = 0
    for rec, pts in chunks:
        rec.add(pts, values[start:start + len(pts)])
        start += len(pts)
    strat.iteration = k

    if schedule.mode == "dynamic":
        sigma, kappa = _alpha_inputs(strat, config.kde)
        alpha = update_alpha(strat.measures(), sigma, kappa, strat.n_total, schedule)
    schedule.history.append(alpha)
    return IterationRow(k, strat.n_total, len(strat), split, estimator_variance_hat(strat), alpha)


def finalize(strat: Stratification, schedule: AlphaSchedule | None = None,
             rows: list[IterationRow] | None = None, evaluations: int | None = None) -> RunReport:
    counts = strat.counts()
    if np.any(counts == 0):
        raise ValueError("every stratum needs at least one sample")
    estimate = float(np.dot(strat.measures(), strat.means()))
    return RunReport(
        estimate=estimate,
        v_hat=estimator_variance_hat(strat),
        n_strata=len(strat),
        alpha_history=list(schedule.history) if schedule else [],
        rows=list(rows or []),
        evaluations=strat.n_total if evaluations is None else evaluations,
        stratification=strat,
    )


def run(config: SamplerConfig, model: ModelFunction) -> RunReport:
    """Adaptive run until ``config.n_max`` model evaluations are spent."""
    source = RandomSource(config.seed)
    schedule = config.schedule()
    before = model.evaluations
    strat = initialize(config, model, source)
    rows: list[IterationRow] = []
    while True:
        try:
            row = iterate(strat, model, config, schedule, source)
        except Exception as exc:  # noqa: BLE001 - surfaced with the partial report
            raise SamplerAborted(f"model evaluation failed: {exc}",
                                 finalize(strat, schedule, rows, model.evaluations - before)) from exc
        if row is None:
            break
        rows.append(row)
    return finalize(strat, schedule, rows, model.evaluations - before)
