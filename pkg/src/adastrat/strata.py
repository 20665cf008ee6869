"""Stratum records and the stratification container."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Geometry
from .statistics import StratumStats, batch_side_stats, merge_arrays, update, variance_from_arrays


class TentativeSplitTable:
    """Running (count, mean, m2) of both halves of every candidate bisection.

    Arrays have shape ``(n_planes, 2)``; column 0 is the minus side.
    """

    def __init__(self, n_planes: int):
        self.count = np.zeros((n_planes, 2))
        self.mean = np.zeros((n_planes, 2))
        self.m2 = np.zeros((n_planes, 2))

    @property
    def n_planes(self) -> int:
        return self.count.shape[0]

    def record_batch(self, geom: Geometry, points: np.ndarray, values: np.ndarray) -> None:
        if len(values) == 0:
            return
        plus = geom.sides(points)
        batch = np.stack([~plus, plus], axis=-1).reshape(len(values), -1)
        c, m, s = batch_side_stats(values, batch)
        shape = self.count.shape
        n, mu, m2 = merge_arrays(self.count.ravel(), self.mean.ravel(), self.m2.ravel(), c, m, s)
        self.count, self.mean, self.m2 = n.reshape(shape), mu.reshape(shape), m2.reshape(shape)

    def record_sample(self, geom: Geometry, point, value: float) -> None:
        plus = geom.sides(point)[0]
        for j, side in enumerate(plus.astype(int)):
            s = update(StratumStats(int(self.count[j, side]), self.mean[j, side], self.m2[j, side]), value)
            self.count[j, side], self.mean[j, side], self.m2[j, side] = s.count, s.mean, s.m2

    def pair(self, j: int) -> tuple[StratumStats, StratumStats]:
        return tuple(StratumStats(int(self.count[j, s]), float(self.mean[j, s]), float(self.m2[j, s]))
                     for s in (0, 1))

    def stds(self) -> np.ndarray:
        return np.sqrt(variance_from_arrays(self.count, self.m2))


@dataclass
class StratumRecord:
    id: int
    geom: Geometry
    points: np.ndarray
    values: np.ndarray
    stats: StratumStats = field(default_factory=StratumStats)
    table: TentativeSplitTable | None = None

    def __post_init__(self):
        if self.table is None:
            self.table = TentativeSplitTable(len(self.geom.split_planes()))

    @classmethod
    def build(cls, sid: int, geom: Geometry, points=None, values=None) -> "StratumRecord":
        n = geom.dim
        pts = np.empty((0, n)) if points is None else np.asarray(points, dtype=float).reshape(-1, n)
        vals = np.empty(0) if values is None else np.asarray(values, dtype=float).ravel()
        rec = cls(sid, geom, np.empty((0, n)), np.empty(0))
        rec.add(pts, vals)
        return rec

    @property
    def measure(self) -> float:
        return self.geom.measure

    @property
    def count(self) -> int:
        return self.stats.count

    def add(self, points: np.ndarray, values: np.ndarray) -> None:
        if len(values) == 0:
            return
        self.points = np.concatenate([self.points, points])
        self.values = np.concatenate([self.values, values])
        self.stats = self.stats.merge(StratumStats.from_values(values))
        self.table.record_batch(self.geom, points, values)


@dataclass
class Stratification:
    dim: int
    kind: str
    strata: list[StratumRecord]
    next_id: int = 0
    iteration: int = 0

    def __post_init__(self):
        if self.strata:
            self.next_id = max(self.next_id, max(s.id for s in self.strata) + 1)

    def new_id(self) -> int:
        sid = self.next_id
        self.next_id += 1
        return sid

    def __len__(self) -> int:
        return len(self.strata)

    @property
    def n_total(self) -> int:
        return sum(s.count for s in self.strata)

    def measures(self) -> np.ndarray:
        return np.array([s.measure for s in self.strata])

    def counts(self) -> np.ndarray:
        return np.array([s.count for s in self.strata], dtype=np.int64)

    def means(self) -> np.ndarray:
        return np.array([s.stats.mean for s in self.strata])

    def stds(self) -> np.ndarray:
        return np.array([s.stats.std for s in self.strata])

    def locate(self, point) -> int:
        """Index of the stratum containing ``point``."""
        for i, s in enumerate(self.strata):
            if s.geom.contains(point):
                return i
        raise ValueError("point is not covered by the stratification")
