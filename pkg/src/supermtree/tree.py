"""SuperM-Tree: an M-Tree variant over metric subset spaces.

Along every root-to-leaf path routing objects are nondecreasing in size, so
the chain triangle inequality of the space is enough to prune subtrees when
looking for stored objects that are (approximately) contained in a query.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import math
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

import numpy as np

from .space import SubsetSpace, chain_tolerance

__all__ = [
    "SplitPolicy",
    "TreeConfig",
    "LeafEntry",
    "RoutingEntry",
    "Node",
    "Neighbor",
    "Promotion",
    "TreeStats",
    "SuperMTree",
    "virtual_distance",
]

INF = math.inf


class SplitPolicy(str, enum.Enum):
    FIXED = "fixed"
    LARGE = "large"


@dataclass(frozen=True)
class TreeConfig:
    capacity: int = 128
    split_policy: SplitPolicy = SplitPolicy.LARGE
    count_distances: bool = True

    def __post_init__(self):
        if self.capacity < 4:
            raise ValueError("capacity must be at least 4")
        object.__setattr__(self, "split_policy", SplitPolicy(self.split_policy))


@dataclass(slots=True, eq=False)
class LeafEntry:
    obj: Any
    size: float
    id: int
    dist_to_parent: Optional[float] = None

    @property
    def radius(self) -> float:
        return 0.0


@dataclass(slots=True, eq=False)
class RoutingEntry:
    obj: Any
    size: float
    radius: float
    child: "Node"
    dist_to_parent: Optional[float] = None


@dataclass(slots=True, eq=False)
class Node:
    leaf: bool
    entries: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True, order=True)
class Neighbor:
    distance: float
    id: int


@dataclass
class Promotion:
    """Chosen routing pair and the resulting partition, as node positions."""

    first: int
    second: int
    to_first: np.ndarray  # boolean mask over node entries
    radius_first: float
    radius_second: float
    overlap: float
    dist_first: np.ndarray = field(repr=False, default=None)
    dist_second: np.ndarray = field(repr=False, default=None)

    @property
    def sizes(self) -> tuple[int, int]:
        n1 = int(self.to_first.sum())
        return n1, len(self.to_first) - n1


@dataclass
class TreeStats:
    nodes: int
    leaves: int
    depth: int
    objects: int
    entry_histogram: dict
    build_distance_evals: int
    query_distance_evals: int
    splits: int
    refused_splits: int

    def to_dict(self) -> dict:
        return {
            "nodes": self.nodes,
            "leaves": self.leaves,
            "depth": self.depth,
            "objects": self.objects,
            "entry_histogram": {str(k): v for k, v in sorted(self.entry_histogram.items())},
            "build_distance_evals": self.build_distance_evals,
            "query_distance_evals": self.query_distance_evals,
            "splits": self.splits,
            "refused_splits": self.refused_splits,
        }


def virtual_distance(space: SubsetSpace, refs: Iterable[Any], s, t) -> float:
    """min over references ``r`` with ``s, t ⊑ r`` of ``d(t, r) + d(s, r)``."""
    best = INF
    for r in refs:
        if space.is_sub(s, r) and space.is_sub(t, r):
            best = min(best, space.distance(t, r) + space.distance(s, r))
    return best


class _Meter:
    __slots__ = ("count",)

    def __init__(self):
        self.count = 0


class SuperMTree:
    """Balanced index over a :class:`SubsetSpace`.

    >>> from supermtree.distances import SHD, as_set
    >>> tree = SuperMTree(SHD)
    >>> tree.insert(as_set([1.0]), 0)
    >>> tree.insert(as_set([1.0, 4.0]), 1)
    >>> [n.id for n in tree.range_query(as_set([0.5, 4.2]), 0.6)]
    [0, 1]
    """

    def __init__(self, space: SubsetSpace, config: TreeConfig | None = None, **kwargs):
        self.space = space
        self.config = config or TreeConfig(**kwargs)
        self.root = Node(leaf=True)
        self.ids: set[int] = set()
        self.build_evals = 0
        self.query_evals = 0
        # min(|N1|, |N2|) of every executed split, in order
        self.split_log: list[int] = []
        self.refused_splits = 0
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.ids)

    # -- distance plumbing ---------------------------------------------

    def _m2o(self, objs, q, meter: _Meter) -> np.ndarray:
        out = self.space.many_to_one(objs, q)
        meter.count += len(objs)
        if np.isnan(out).any():
            raise ValueError("distance evaluated to NaN")
        return out

    def _o2m(self, x, objs, meter: _Meter) -> np.ndarray:
        out = self.space.one_to_many(x, objs)
        meter.count += len(objs)
        if np.isnan(out).any():
            raise ValueError("distance evaluated to NaN")
        return out

    def _d(self, x, y, meter: _Meter) -> float:
        meter.count += 1
        out = self.space.distance(x, y)
        if out != out:
            raise ValueError("distance evaluated to NaN")
        return out

    def _record(self, meter: _Meter, build: bool) -> None:
        if not self.config.count_distances:
            return
        with self._lock:
            if build:
                self.build_evals += meter.count
            else:
                self.query_evals += meter.count

    # -- insertion -----------------------------------------------------

    def insert(self, obj, id: int) -> None:
        if id in self.ids:
            raise ValueError(f"duplicate id {id}")
        meter = _Meter()
        try:
            self._insert(self.root, obj, self.space.size(obj), id, None, None, meter)
            while (promotion := self._split(self.root, meter)) is not None:
                first, second = self._divide(self.root, promotion, None, None, meter)
                self.root = Node(leaf=False, entries=[first, second])
                self._settle(self.root, 1, None, None, meter)
                self._settle(self.root, 0, None, None, meter)
        finally:
            self._record(meter, build=True)
        self.ids.add(id)

    def extend(self, items: Iterable[tuple[int, Any]]) -> None:
        for id, obj in items:
            self.insert(obj, id)

    def choose_subtree(self, node: Node, obj, size=None, meter: _Meter | None = None) -> tuple[int, float]:
        """Position of the routing entry to descend into, and ``d(O_r, obj)`` (inf if undefined)."""
        meter = meter or _Meter()
        if size is None:
            size = self.space.size(obj)
        entries = node.entries
        sizes = np.array([e.size for e in entries], dtype=float)
        below = np.flatnonzero(sizes <= size)  # O_r ⊑ O
        above = np.flatnonzero(sizes >= size)  # O ⊑ O_r
        to_obj = np.full(len(entries), INF)
        score = np.full(len(entries), INF)
        if len(below):
            to_obj[below] = self._m2o([entries[i].obj for i in below], obj, meter)
            score[below] = to_obj[below]
        if len(above):
            from_obj = self._o2m(obj, [entries[i].obj for i in above], meter)
            score[above] = np.minimum(score[above], from_obj)
        pos = int(np.argmin(score))
        return pos, float(to_obj[pos])

    def _insert(self, node: Node, obj, size, id, parent_obj, parent_size, meter: _Meter) -> None:
        if node.leaf:
            dtp = None
            if parent_obj is not None and parent_size <= size:
                dtp = self._d(parent_obj, obj, meter)
            node.entries.append(LeafEntry(obj, size, id, dtp))
            return

        pos, d_to_obj = self.choose_subtree(node, obj, size, meter)
        entry = node.entries[pos]
        exchange = not entry.size <= size
        if not exchange and d_to_obj > entry.radius:
            entry.radius = d_to_obj

        self._insert(entry.child, obj, size, id, entry.obj, entry.size, meter)

        if exchange:
            entry.obj = obj
            entry.size = size
            children = entry.child.entries
            dists = self._o2m(obj, [c.obj for c in children], meter)
            radius = 0.0
            for c, dc in zip(children, dists):
                c.dist_to_parent = float(dc)
                radius = max(radius, float(dc) + c.radius)
            entry.radius = radius
            if parent_obj is not None and parent_size <= size:
                entry.dist_to_parent = self._d(parent_obj, obj, meter)

        self._settle(node, pos, parent_obj, parent_size, meter)

    def _settle(self, node: Node, pos: int, parent_obj, parent_size, meter: _Meter) -> None:
        # split the child at ``pos`` if it overflows; halves of an oversized node may need it again
        promotion = self._split(node.entries[pos].child, meter)
        if promotion is None:
            return
        first, second = self._divide(node.entries[pos].child, promotion, parent_obj, parent_size, meter)
        node.entries[pos] = first
        node.entries.append(second)
        last = len(node.entries) - 1
        self._settle(node, last, parent_obj, parent_size, meter)
        self._settle(node, pos, parent_obj, parent_size, meter)

    # -- splitting -----------------------------------------------------

    def split(self, node: Node) -> Optional[Promotion]:
        """Promotion to apply if ``node`` overflows and a split is acceptable, else None."""
        return self._split(node, _Meter())

    def _split(self, node: Node, meter: _Meter) -> Optional[Promotion]:
        if len(node) <= self.config.capacity:
            return None
        promotion = self._promote(node, meter)
        if promotion is None:
            self.refused_splits += 1
        return promotion

    def promote(self, node: Node) -> Optional[Promotion]:
        return self._promote(node, _Meter())

    def candidates(self, node: Node) -> list[int]:
        """Positions of the size-minimal entries, widened by the next tier if only one is minimal."""
        sizes = np.array([e.size for e in node.entries], dtype=float)
        smallest = sizes.min()
        cand = np.flatnonzero(sizes == smallest)
        if len(cand) == 1:
            rest = np.delete(np.arange(len(sizes)), cand)
            if len(rest):
                cand = np.sort(np.concatenate([cand, rest[sizes[rest] == sizes[rest].min()]]))
        return [int(i) for i in cand]

    def _promote(self, node: Node, meter: _Meter) -> Optional[Promotion]:
        entries = node.entries
        sizes = np.array([e.size for e in entries], dtype=float)
        radii = np.array([e.radius for e in entries], dtype=float)
        objs = [e.obj for e in entries]
        cand = self.candidates(node)
        # dist[c, j] = d(C_c, O_j), or inf where C_c is not below O_j
        dist = np.full((len(cand), len(entries)), INF)
        for row, c in enumerate(cand):
            ok = np.flatnonzero(sizes[c] <= sizes)
            dist[row, ok] = self._o2m(objs[c], [objs[j] for j in ok], meter)
        large = self.config.split_policy is SplitPolicy.LARGE

        best = None
        best_key = None
        n = len(entries)
        for a in range(len(cand)):
            da = dist[a]
            for b in range(a + 1, len(cand)):
                db = dist[b]
                if np.any(np.isinf(da) & np.isinf(db)):
                    # some entry would end up below neither routing object
                    continue
                to_a = da < db
                n_a = int(to_a.sum())
                n_b = n - n_a
                if n_a == 0 or n_b == 0:
                    continue
                if large and (n_a <= 1 or n_b <= 1):
                    continue
                r_a = float(np.max(np.where(to_a, da + radii, -INF)))
                r_b = float(np.max(np.where(to_a, -INF, db + radii)))
                v = float(np.min(da + db))
                p = r_a + r_b - v
                key = (p, abs(n_a - n_b) if p == -INF else 0)
                if best_key is None or key < best_key:
                    best_key = key
                    best = Promotion(cand[a], cand[b], to_a, r_a, r_b, p, da, db)
        return best

    def partition(self, node: Node, first: int, second: int) -> tuple[list, list]:
        """Split entries between two routing candidates: strictly nearer ``first`` goes left."""
        entries = node.entries
        meter = _Meter()
        d1 = self._directed_all(entries[first], entries, meter)
        d2 = self._directed_all(entries[second], entries, meter)
        to_first = d1 < d2
        return [e for e, f in zip(entries, to_first) if f], [e for e, f in zip(entries, to_first) if not f]

    def _directed_all(self, src, entries, meter) -> np.ndarray:
        out = np.full(len(entries), INF)
        ok = [i for i, e in enumerate(entries) if src.size <= e.size]
        out[ok] = self._o2m(src.obj, [entries[i].obj for i in ok], meter)
        return out

    def _divide(self, node: Node, promotion: Promotion, parent_obj, parent_size, meter: _Meter):
        entries = node.entries
        left, right = [], []
        for e, f, d1, d2 in zip(entries, promotion.to_first, promotion.dist_first, promotion.dist_second):
            if f:
                e.dist_to_parent = float(d1)
                left.append(e)
            else:
                e.dist_to_parent = float(d2)
                right.append(e)
        self.split_log.append(min(len(left), len(right)))
        o1 = entries[promotion.first]
        o2 = entries[promotion.second]
        routing = []
        for o, part, radius in ((o1, left, promotion.radius_first), (o2, right, promotion.radius_second)):
            dtp = None
            if parent_obj is not None and parent_size <= o.size:
                dtp = self._d(parent_obj, o.obj, meter)
            routing.append(RoutingEntry(o.obj, o.size, radius, Node(node.leaf, part), dtp))
        return routing[0], routing[1]

    # -- queries -------------------------------------------------------

    def range_query(self, q, radius: float) -> list[Neighbor]:
        """All stored ``O ⊑ q`` with ``d(O, q) <= radius``, sorted by (distance, id)."""
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        meter = _Meter()
        out: list[Neighbor] = []
        try:
            self._range(self.root, q, self.space.size(q), radius, None, out, meter)
        finally:
            self._record(meter, build=False)
        out.sort()
        return out

    def _range(self, node, q, qsize, radius, d_parent_q, out, meter) -> None:
        eligible = [e for e in node.entries if e.size <= qsize]
        if not eligible:
            return
        if node.leaf:
            dists = self._m2o([e.obj for e in eligible], q, meter)
            for e, d in zip(eligible, dists):
                if d <= radius:
                    out.append(Neighbor(float(d), e.id))
            return
        slack = chain_tolerance(radius)
        if d_parent_q is not None:
            eligible = [
                e for e in eligible
                if e.dist_to_parent is None
                or not d_parent_q - e.dist_to_parent - e.radius > radius + slack
            ]
            if not eligible:
                return
        dists = self._m2o([e.obj for e in eligible], q, meter)
        for e, d in zip(eligible, dists):
            if d - e.radius > radius + slack:
                continue
            self._range(e.child, q, qsize, radius, float(d), out, meter)

    def knn_query(self, q, k: int) -> list[Neighbor]:
        """Up to ``k`` stored ``O ⊑ q`` nearest to ``q``; ties by id."""
        if k < 1:
            raise ValueError("k must be at least 1")
        meter = _Meter()
        try:
            return self._knn(q, k, meter)
        finally:
            self._record(meter, build=False)

    def _knn(self, q, k, meter) -> list[Neighbor]:
        qsize = self.space.size(q)
        tick = itertools.count()
        pending = [(0.0, next(tick), self.root, None)]
        best: list[tuple[float, int]] = []  # max-heap of (-distance, -id)

        def bound():
            return -best[0][0] if len(best) == k else INF

        while pending:
            lb, _, node, d_parent_q = heapq.heappop(pending)
            limit = bound()
            if lb > limit + chain_tolerance(limit):
                break
            eligible = [e for e in node.entries if e.size <= qsize]
            if not eligible:
                continue
            if node.leaf:
                dists = self._m2o([e.obj for e in eligible], q, meter)
                for e, d in zip(eligible, dists):
                    item = (-float(d), -e.id)
                    if len(best) < k:
                        heapq.heappush(best, item)
                    elif item > best[0]:
                        heapq.heapreplace(best, item)
                continue
            if d_parent_q is not None:
                limit = bound()
                slack = chain_tolerance(limit)
                eligible = [
                    e for e in eligible
                    if e.dist_to_parent is None
                    or not d_parent_q - e.dist_to_parent - e.radius > limit + slack
                ]
                if not eligible:
                    continue
            dists = self._m2o([e.obj for e in eligible], q, meter)
            limit = bound()
            slack = chain_tolerance(limit)
            for e, d in zip(eligible, dists):
                child_lb = max(0.0, float(d) - e.radius)
                if child_lb > limit + slack:
                    continue
                heapq.heappush(pending, (child_lb, next(tick), e.child, float(d)))
        return sorted(Neighbor(-nd, -nid) for nd, nid in best)

    # -- inspection ----------------------------------------------------

    def iter_leaf_entries(self) -> Iterable[LeafEntry]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.leaf:
                yield from node.entries
            else:
                stack.extend(e.child for e in node.entries)

    def stats(self) -> TreeStats:
        nodes = leaves = objects = 0
        hist: Counter = Counter()
        depth = 0
        stack = [(self.root, 1)]
        while stack:
            node, level = stack.pop()
            nodes += 1
            hist[len(node)] += 1
            depth = max(depth, level)
            if node.leaf:
                leaves += 1
                objects += len(node)
            else:
                stack.extend((e.child, level + 1) for e in node.entries)
        return TreeStats(
            nodes=nodes,
            leaves=leaves,
            depth=depth,
            objects=objects,
            entry_histogram=dict(hist),
            build_distance_evals=self.build_evals,
            query_distance_evals=self.query_evals,
            splits=len(self.split_log),
            refused_splits=self.refused_splits,
        )

    def validate(self) -> list[str]:
        """Recheck every structural invariant exhaustively; returns violation messages."""
        problems: list[str] = []
        leaf_depths: set[int] = set()
        seen: set[int] = set()
        space = self.space
        cap = self.config.capacity
        large = self.config.split_policy is SplitPolicy.LARGE

        def close(a, b):
            return abs(a - b) <= 1e-9 * (1.0 + abs(b))

        def walk(node: Node, level: int, path: str, parent) -> list:
            """Returns the leaf entries under ``node``."""
            if len(node) > cap:
                if not large:
                    problems.append(f"{path}: {len(node)} entries exceed capacity {cap}")
                elif self._promote(node, _Meter()) is not None:
                    problems.append(f"{path}: oversized node has a non-degenerate split")
            if node.leaf:
                leaf_depths.add(level)
                covered = list(node.entries)
            else:
                covered = []
            for i, e in enumerate(node.entries):
                where = f"{path}/{i}"
                if parent is not None:
                    if not parent.size <= e.size:
                        problems.append(f"{where}: order violated, parent larger than entry")
                    elif e.dist_to_parent is None or not close(
                        e.dist_to_parent, space.distance(parent.obj, e.obj)
                    ):
                        problems.append(f"{where}: stale distance to parent")
                if node.leaf:
                    if e.id in seen:
                        problems.append(f"{where}: duplicate id {e.id}")
                    seen.add(e.id)
                    continue
                if not e.child.entries:
                    problems.append(f"{where}: empty child node")
                below = walk(e.child, level + 1, where, e)
                covered.extend(below)
                if not below:
                    continue
                if any(not e.size <= o.size for o in below):
                    problems.append(f"{where}: order violated, routing object larger than a covered object")
                    continue
                d = space.one_to_many(e.obj, [o.obj for o in below])
                worst = float(d.max())
                if worst > e.radius + 1e-9 * (1.0 + e.radius):
                    problems.append(f"{where}: covering radius {e.radius:g} < {worst:g}")
            return covered

        walk(self.root, 0, "root", None)
        if len(leaf_depths) > 1:
            problems.append(f"unbalanced: leaves at depths {sorted(leaf_depths)}")
        if seen != self.ids:
            problems.append(f"stored ids differ from inserted ids ({len(seen)} vs {len(self.ids)})")
        return problems
