"""Exact linear-scan queries: ground truth for the tree and the speedup baseline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .distances import range_lower_bound
from .space import SubsetSpace
from .tree import Neighbor

__all__ = ["ScanCounter", "LinearScan", "scan_range", "scan_knn"]


@dataclass
class ScanCounter:
    full: int = 0
    bounds: int = 0


class LinearScan:
    """Linear scan over ``(id, object)`` records of one subset space."""

    def __init__(self, space: SubsetSpace, records: Sequence[tuple[int, Any]]):
        self.space = space
        self.ids = np.array([r[0] for r in records], dtype=np.int64)
        if len(set(self.ids.tolist())) != len(self.ids):
            raise ValueError("dataset ids must be unique")
        self.objs = [r[1] for r in records]
        self.sizes = np.array([space.size(o) for o in self.objs], dtype=float)
        self._ranges = None
        if space.lower_bound is range_lower_bound and self._scalar(self.objs):
            self._ranges = np.array([(o.min(), o.max()) if len(o) else (np.inf, -np.inf) for o in self.objs])
            self._ranges = self._ranges.reshape(-1, 2)

    @staticmethod
    def _scalar(objs) -> bool:
        return all(o.ndim == 1 or o.shape[1] == 1 for o in objs)

    def _bounds(self, idx, q) -> np.ndarray:
        if self._ranges is not None and self._scalar([q]) and len(q):
            lo, hi = self._ranges[idx, 0], self._ranges[idx, 1]
            gap = np.maximum(lo - q.max(), q.min() - hi)
            return np.where(np.isfinite(gap), np.maximum(gap, 0.0), 0.0)
        bound = self.space.lower_bound
        return np.array([bound(self.objs[i], q) for i in idx], dtype=float)

    def __len__(self):
        return len(self.objs)

    def _eligible(self, q) -> np.ndarray:
        return np.flatnonzero(self.sizes <= self.space.size(q))

    def distances(self, q, counter: ScanCounter | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Ids and distances of every size-eligible record."""
        idx = self._eligible(q)
        d = self.space.many_to_one([self.objs[i] for i in idx], q)
        if counter is not None:
            counter.full += len(idx)
        return self.ids[idx], d

    def range(self, q, radius: float, use_lower_bounds: bool = False,
              counter: ScanCounter | None = None) -> list[Neighbor]:
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        idx = self._eligible(q)
        if use_lower_bounds and self.space.lower_bound is not None:
            lb = self._bounds(idx, q)
            if counter is not None:
                counter.bounds += len(idx)
            idx = idx[lb <= radius]
        d = self.space.many_to_one([self.objs[i] for i in idx], q)
        if counter is not None:
            counter.full += len(idx)
        hit = d <= radius
        return sorted(Neighbor(float(x), int(i)) for x, i in zip(d[hit], self.ids[idx][hit]))

    def knn(self, q, k: int, counter: ScanCounter | None = None) -> list[Neighbor]:
        if k < 1:
            raise ValueError("k must be at least 1")
        ids, d = self.distances(q, counter)
        order = np.lexsort((ids, d))[:k]
        return [Neighbor(float(d[i]), int(ids[i])) for i in order]


def scan_range(space: SubsetSpace, records, q, radius: float, use_lower_bounds: bool = False,
               counter: ScanCounter | None = None) -> list[Neighbor]:
    return LinearScan(space, records).range(q, radius, use_lower_bounds, counter)


def scan_knn(space: SubsetSpace, records, q, k: int, counter: ScanCounter | None = None) -> list[Neighbor]:
    return LinearScan(space, records).knn(q, k, counter)
