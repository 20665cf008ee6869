"""Adaptive stratified Monte Carlo sampling with hybrid allocation."""

from .allocation import sequential_counts, sequential_counts_reserve_one, target_rates
from .alpha_control import AlphaSchedule, objective_j, update_alpha
from .domain import ModelFunction, ParameterMap, RandomSource
from .driver import RunReport, SamplerConfig, finalize, initialize, iterate, run
from .geometry import HyperRectangle, Simplex, kuhn_decomposition
from .problems import get_problem, problem_ids
from .variance import variance_constant

__all__ = [
    "AlphaSchedule", "HyperRectangle", "ModelFunction", "ParameterMap", "RandomSource", "RunReport",
    "SamplerConfig", "Simplex", "finalize", "get_problem", "initialize", "iterate", "kuhn_decomposition",
    "objective_j", "problem_ids", "run", "sequential_counts", "sequential_counts_reserve_one",
    "target_rates", "update_alpha", "variance_constant",
]
