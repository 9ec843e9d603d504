import math

import numpy as np
import pytest

from supermtree import datagen
from supermtree.distances import L2WIN, SDK, SHD, as_series, as_set
from supermtree.scan import LinearScan, ScanCounter, scan_knn, scan_range
from supermtree.tree import Neighbor


def seq_items(n=300, seed=1):
    return [r.item for r in datagen.random_sequences(datagen.RandomSpec(count=n, max_size=20, seed=seed))]


def set_items(n=300, seed=1):
    return [r.item for r in datagen.random_sets(datagen.RandomSpec(count=n, max_size=10, seed=seed))]


def test_empty_dataset():
    assert scan_range(SHD, [], as_set([1.0]), math.inf) == []
    assert scan_knn(SHD, [], as_set([1.0]), 3) == []


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        LinearScan(SHD, [(1, as_set([0.0])), (1, as_set([2.0]))])


def test_bad_arguments():
    scan = LinearScan(SHD, set_items(10))
    with pytest.raises(ValueError):
        scan.range(as_set([0.0]), -0.5)
    with pytest.raises(ValueError):
        scan.knn(as_set([0.0]), 0)


def test_infinite_radius_returns_eligible():
    items = seq_items()
    q = as_series(np.linspace(0, 1, 8))
    res = scan_range(SDK, items, q, math.inf)
    assert {n.id for n in res} == {i for i, o in items if len(o) <= 8}
    assert res == sorted(res)


def test_range_matches_definition():
    items = set_items()
    q = items[3][1]
    expected = sorted(
        Neighbor(SHD.distance(o, q), i) for i, o in items if len(o) <= len(q) and SHD.distance(o, q) <= 0.1
    )
    assert scan_range(SHD, items, q, 0.1) == expected


@pytest.mark.parametrize("space,make", [(L2WIN, seq_items), (SDK, seq_items), (SHD, set_items)],
                         ids=["l2win", "sdk", "shd"])
def test_lower_bounds_do_not_change_results(space, make):
    items = make(400, seed=2)
    scan = LinearScan(space, items)
    rng = np.random.default_rng(0)
    for _ in range(1000 // 3):
        q = items[int(rng.integers(len(items)))][1] + rng.uniform(-0.3, 0.3)
        if space.kind == "set":
            q = as_set(q)
        radius = float(rng.uniform(0, 0.5))
        plain, bounded = ScanCounter(), ScanCounter()
        assert scan.range(q, radius, False, plain) == scan.range(q, radius, True, bounded)
        assert bounded.full <= plain.full


def test_lower_bounds_skip_some_work():
    items = seq_items(400, seed=3)
    scan = LinearScan(L2WIN, items)
    counter = ScanCounter()
    scan.range(as_series(np.full(64, 5.0)), 0.5, True, counter)
    assert counter.full == 0 and counter.bounds > 0


def test_knn_exact_copy_and_ties():
    items = [(5, as_set([1.0])), (2, as_set([3.0])), (9, as_set([1.0]))]
    q = as_set([1.0, 7.0])
    assert scan_knn(SHD, items, q, 2) == [Neighbor(0.0, 5), Neighbor(0.0, 9)]
    assert scan_knn(SHD, items, q, 10) == [Neighbor(0.0, 5), Neighbor(0.0, 9), Neighbor(2.0, 2)]


def test_knn_agrees_with_range_at_kth_distance():
    items = seq_items(500, seed=4)
    scan = LinearScan(SDK, items)
    for id, q in items[:30]:
        knn = scan.knn(q, 5)
        ball = scan.range(q, knn[-1].distance)
        assert knn == ball[:len(knn)]
        assert all(n.distance == knn[-1].distance for n in ball[len(knn):])
