"""Tree-versus-scan benchmark runs with built-in result verification."""

from __future__ import annotations

import csv
import json
import os
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .records import Record
from .scan import LinearScan, ScanCounter
from .space import SubsetSpace
from .tree import Neighbor, SuperMTree, TreeConfig

__all__ = [
    "REPORT_HEADER",
    "BenchRow",
    "BenchResult",
    "holdout",
    "build_tree",
    "same_results",
    "run_bench",
    "append_report",
    "write_results",
]

REPORT_HEADER = [
    "size",
    "distance",
    "policy",
    "capacity",
    "build_s",
    "query_s_mean",
    "dist_evals_build",
    "dist_evals_query_mean",
    "speedup",
    "equivalent",
]


@dataclass
class BenchRow:
    size: int
    distance: str
    policy: str
    capacity: int
    build_s: float
    query_s_mean: float
    dist_evals_build: int
    dist_evals_query_mean: float
    speedup: float
    equivalent: bool

    def as_csv(self) -> list[str]:
        return [
            str(self.size),
            self.distance,
            self.policy,
            str(self.capacity),
            f"{self.build_s:.6f}",
            f"{self.query_s_mean:.6f}",
            str(self.dist_evals_build),
            f"{self.dist_evals_query_mean:.3f}",
            f"{self.speedup:.4f}",
            "true" if self.equivalent else "false",
        ]


@dataclass
class BenchResult:
    row: BenchRow
    tree_results: list[list[Neighbor]]
    scan_results: list[list[Neighbor]]
    scan_query_s_mean: float
    scan_evals_mean: float
    mismatches: list[int] = field(default_factory=list)

    @property
    def wallclock_speedup(self) -> float:
        if self.row.query_s_mean <= 0:
            return float("inf")
        return self.scan_query_s_mean / self.row.query_s_mean

    def summary(self) -> dict:
        out = asdict(self.row)
        out["scan_query_s_mean"] = self.scan_query_s_mean
        out["scan_evals_mean"] = self.scan_evals_mean
        out["wallclock_speedup"] = self.wallclock_speedup
        out["mismatched_queries"] = self.mismatches
        return out


def holdout(records: Sequence[Record], count: int, seed: int) -> tuple[list[Record], list[Record]]:
    """Split off ``count`` query records, chosen by ``seed``; returns (indexed, queries)."""
    if count >= len(records):
        raise ValueError(f"cannot hold out {count} queries from {len(records)} records")
    pick = set(np.random.default_rng(seed).choice(len(records), size=count, replace=False).tolist())
    data = [r for i, r in enumerate(records) if i not in pick]
    queries = [r for i, r in enumerate(records) if i in pick]
    return data, queries


def build_tree(space: SubsetSpace, records: Sequence[Record], config: TreeConfig) -> tuple[SuperMTree, float]:
    tree = SuperMTree(space, config)
    start = time.perf_counter()
    for rec in records:
        tree.insert(rec.obj, rec.id)
    return tree, time.perf_counter() - start


def same_results(tree_res: list[Neighbor], scan_res: list[Neighbor], knn: bool) -> bool:
    if knn:
        return Counter(n.distance for n in tree_res) == Counter(n.distance for n in scan_res)
    return tree_res == scan_res


def _timed(fn, q):
    start = time.perf_counter()
    out = fn(q)
    return out, time.perf_counter() - start


def run_bench(
    space: SubsetSpace,
    records: Sequence[Record],
    queries: Sequence[Record],
    config: TreeConfig,
    k: Optional[int] = 1,
    radius: Optional[float] = None,
    workers: int = 1,
) -> BenchResult:
    """Build, query tree and scan with the same batch, compare answers."""
    if (k is None) == (radius is None):
        raise ValueError("give exactly one of k or radius")
    tree, build_s = build_tree(space, records, config)
    scan = LinearScan(space, [r.item for r in records])
    qobjs = [q.obj for q in queries]

    before = tree.query_evals
    if k is not None:
        tree_fn = lambda q: tree.knn_query(q, k)  # noqa: E731
    else:
        tree_fn = lambda q: tree.range_query(q, radius)  # noqa: E731
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        timed = list(pool.map(lambda q: _timed(tree_fn, q), qobjs))
    tree_results = [r for r, _ in timed]
    tree_s = [t for _, t in timed]
    tree_evals = tree.query_evals - before

    counter = ScanCounter()
    scan_results, scan_s = [], []
    for q in qobjs:
        start = time.perf_counter()
        if k is not None:
            scan_results.append(scan.knn(q, k, counter))
        else:
            scan_results.append(scan.range(q, radius, use_lower_bounds=True, counter=counter))
        scan_s.append(time.perf_counter() - start)

    mismatches = [
        i for i, (a, b) in enumerate(zip(tree_results, scan_results)) if not same_results(a, b, k is not None)
    ]
    nq = max(1, len(qobjs))
    tree_mean = tree_evals / nq
    scan_mean = counter.full / nq
    if tree_mean > 0:
        speedup = scan_mean / tree_mean
    else:
        speedup = float("inf") if scan_mean > 0 else 1.0
    row = BenchRow(
        size=len(records),
        distance=space.name,
        policy=config.split_policy.value,
        capacity=config.capacity,
        build_s=build_s,
        query_s_mean=float(np.mean(tree_s)) if tree_s else 0.0,
        dist_evals_build=tree.build_evals,
        dist_evals_query_mean=tree_mean,
        speedup=speedup,
        equivalent=not mismatches,
    )
    return BenchResult(
        row=row,
        tree_results=tree_results,
        scan_results=scan_results,
        scan_query_s_mean=float(np.mean(scan_s)) if scan_s else 0.0,
        scan_evals_mean=scan_mean,
        mismatches=mismatches,
    )


def append_report(path: str | Path, rows: Sequence[BenchRow]) -> None:
    """Append rows to a CSV report, writing the header only into a new or empty file."""
    path = Path(path)
    fresh = not path.exists() or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if fresh:
            writer.writerow(REPORT_HEADER)
        for row in rows:
            writer.writerow(row.as_csv())


def write_results(path: str | Path, queries: Sequence[Record], results: Sequence[list[Neighbor]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for q, res in zip(queries, results):
            fh.write(json.dumps({"query": q.id, "neighbors": [[n.id, n.distance] for n in res]}))
            fh.write("\n")
