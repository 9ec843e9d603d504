"""Acceptance criteria, each checked at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the terminal
summary after the run.
"""

import csv
import math
import time
from collections import Counter

import numpy as np
import pytest

from supermtree import datagen
from supermtree.bench import REPORT_HEADER, run_bench
from supermtree.cli import main
from supermtree.distances import L2WIN, SDK, SHD, as_series, sdk, sdk_bruteforce
from supermtree.scan import LinearScan
from supermtree.space import check_chain_triangle
from supermtree.tree import SplitPolicy, SuperMTree, TreeConfig

from .conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance


def verdict(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def series_records(count, seed, lo=1, hi=128):
    return datagen.random_sequences(datagen.RandomSpec(count=count, min_size=lo, max_size=hi, seed=seed))


def set_records(count, seed, hi=32):
    return datagen.random_sets(datagen.RandomSpec(count=count, max_size=hi, seed=seed))


def build(space, records, policy, capacity=128):
    tree = SuperMTree(space, TreeConfig(capacity=capacity, split_policy=policy))
    start = time.perf_counter()
    for r in records:
        tree.insert(r.obj, r.id)
    return tree, time.perf_counter() - start


# -- 1 -------------------------------------------------------------------------


def test_chain_triangle_axioms():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    report = []
    total_bad = 0
    for space in (L2WIN, SDK, SHD):
        pool = []
        for i in range(3000):
            n = int(rng.integers(1, 13))
            # half the pool uses a tiny alphabet so that ties and exact matches occur
            values = rng.integers(0, 4, size=n).astype(float) if i % 2 else rng.uniform(0, 1, size=n)
            pool.append(np.unique(values) if space.kind == "set" else as_series(values))
        bad = 0
        for _ in range(100_000):
            x, y, z = sorted((pool[j] for j in rng.integers(0, len(pool), 3)), key=space.size)
            if not check_chain_triangle(space, x, y, z):
                bad += 1
        total_bad += bad
        report.append(f"{space.name}={bad}")
    elapsed = time.perf_counter() - start
    verdict(1, total_bad == 0 and elapsed < 120,
            f"chain triangle violations over 1e5 triples each: {', '.join(report)}; {elapsed:.1f}s (< 120s)")


# -- 2 -------------------------------------------------------------------------


def test_sdk_equals_bruteforce():
    start = time.perf_counter()
    rng = np.random.default_rng(77)
    worst = 0.0
    mismatches = 0
    for i in range(10_000):
        lt = int(rng.integers(1, 13))
        ls = int(rng.integers(1, lt + 1))
        if i % 2:
            s, t = rng.integers(0, 4, size=ls).astype(float), rng.integers(0, 4, size=lt).astype(float)
        else:
            s, t = rng.normal(size=ls), rng.normal(size=lt)
        fast, slow = sdk(s, t), sdk_bruteforce(s, t)
        if not math.isclose(fast, slow, rel_tol=1e-12, abs_tol=0.0):
            mismatches += 1
        if slow > 0:
            worst = max(worst, abs(fast - slow) / slow)
    elapsed = time.perf_counter() - start
    verdict(2, mismatches == 0 and elapsed < 60,
            f"sdk vs brute force on 1e4 pairs: {mismatches} mismatches, worst rel err {worst:.2e}; "
            f"{elapsed:.1f}s (< 60s)")


# -- 3 -------------------------------------------------------------------------


def _range_radii(dists):
    finite = np.sort(dists[np.isfinite(dists)])
    if len(finite) == 0:
        return [0.0, 0.0, 0.0]
    return [0.5 * float(finite[0]), float(np.quantile(finite, 0.01)), float(np.quantile(finite, 0.5))]


def test_query_exactness():
    start = time.perf_counter()
    mismatches = 0
    queries_run = 0
    hits = Counter()
    for size in (2 ** 8, 2 ** 10, 2 ** 12):
        for space in (L2WIN, SDK, SHD):
            make = set_records if space.kind == "set" else series_records
            recs = make(size + 100, seed=size)
            data, queries = recs[:size], [r.obj for r in recs[size:]]
            scan = LinearScan(space, [r.item for r in data])
            for policy in SplitPolicy:
                tree, _ = build(space, data, policy)
                for q in queries:
                    _, dists = scan.distances(q)
                    for label, radius in zip(("empty", "sparse", "dense"), _range_radii(dists)):
                        expected = scan.range(q, radius)
                        hits[label] += len(expected)
                        mismatches += tree.range_query(q, radius) != expected
                    for k in (1, 10):
                        got = Counter(n.distance for n in tree.knn_query(q, k))
                        mismatches += got != Counter(n.distance for n in scan.knn(q, k))
                    queries_run += 5
    elapsed = time.perf_counter() - start
    verdict(3, mismatches == 0 and elapsed < 900,
            f"{queries_run} tree queries vs scan: {mismatches} mismatches "
            f"(range hits empty/sparse/dense {hits['empty']}/{hits['sparse']}/{hits['dense']}); "
            f"{elapsed:.0f}s (< 900s)")


# -- 4 -------------------------------------------------------------------------


@pytest.mark.slow
def test_structural_invariants_at_scale():
    recs = series_records(100_000, seed=4)
    parts = []
    problems = []
    for policy in SplitPolicy:
        tree, secs = build(L2WIN, recs, policy)
        found = tree.validate()
        st = tree.stats()
        if st.objects != len(recs):
            found.append(f"{policy.value}: {st.objects} objects stored, {len(recs)} inserted")
        problems += found
        parts.append(f"{policy.value}: {len(found)} violations, depth {st.depth}, {st.nodes} nodes, build {secs:.0f}s")
    verdict(4, not problems,
            "validate() after 1e5 mixed-length inserts: " + "; ".join(parts))


# -- 5 -------------------------------------------------------------------------


def test_speedup_trend_sets():
    ratios = []
    for exp in (10, 12, 14, 16):
        recs = set_records(2 ** exp + 100, seed=exp)
        result = run_bench(SHD, recs[:2 ** exp], recs[2 ** exp:], TreeConfig(), k=1)
        assert result.row.equivalent
        ratios.append(result.row.speedup)
    monotone = all(b >= a for a, b in zip(ratios, ratios[1:]))
    shown = ", ".join(f"2^{e}: {r:.2f}" for e, r in zip((10, 12, 14, 16), ratios))
    verdict(5, monotone and ratios[-1] > 2.0,
            f"SHD 1-NN evaluation ratio scan/tree {shown} (nondecreasing, last > 2)")


# -- 6 -------------------------------------------------------------------------


def test_degenerate_splits():
    recs = series_records(2 ** 14, seed=14)
    fixed, fixed_s = build(L2WIN, recs, SplitPolicy.FIXED)
    large, large_s = build(L2WIN, recs, SplitPolicy.LARGE)
    first = np.array(fixed.split_log[:200], dtype=float)
    running = np.cumsum(first) / np.arange(1, len(first) + 1)
    below = np.flatnonzero(running < 2)
    fell = len(below) > 0
    large_min = min(large.split_log) if large.split_log else math.inf
    ratio = large_s / fixed_s
    verdict(6, fell and large_min >= 2 and ratio < 1,
            f"fixed running mean of min side < 2 after split {int(below[0]) + 1 if fell else 'never'} "
            f"(mean over first 200: {first.mean():.2f}); large min side {large_min} over "
            f"{len(large.split_log)} splits; build time large/fixed {large_s:.1f}s/{fixed_s:.1f}s = {ratio:.2f}")


# -- 7 -------------------------------------------------------------------------


def _polyline_distance(points, poly):
    a, b = poly[:-1], poly[1:]
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    out = np.empty(len(points))
    for k, p in enumerate(points):
        u = np.where(denom > 0, np.einsum("ij,ij->i", p - a, ab) / np.where(denom > 0, denom, 1), 0.0)
        u = np.clip(u, 0.0, 1.0)
        out[k] = np.linalg.norm(a + u[:, None] * ab - p, axis=1).min()
    return out


def test_generators():
    failures = []

    # CBF with the noise source zeroed against the plateau and ramp formulas
    rng = np.random.default_rng(7)
    cbf_err = 0.0
    for _ in range(300):
        length = int(rng.integers(8, 200))
        types = "".join(rng.choice(list("cbf"), size=int(rng.integers(1, 4))))
        seed = int(rng.integers(2 ** 32))
        series, label = datagen.cbf_series(length, types, np.random.default_rng(seed), noise=False)
        twin = np.random.default_rng(seed)
        a = twin.uniform(length / 8, 2 * length / 8)
        b = twin.uniform(6 * length / 8, 7 * length / 8)
        nu = 6.0 + twin.standard_normal(len(types))
        for d, t in enumerate(types):
            for i in range(length):
                inside = math.floor(a) <= i < math.floor(b)
                if not inside:
                    want = 0.0
                elif t == "c":
                    want = nu[d]
                elif t == "b":
                    want = nu[d] * (i - a) / (b - a)
                else:
                    want = nu[d] * (b - i) / (b - a)
                cbf_err = max(cbf_err, abs(series[i, d] - want))
        assert label == types
    if not cbf_err < 1e-9:
        failures.append(f"cbf error {cbf_err}")

    labels = {r.label for r in datagen.cbf_dataset(datagen.CbfSpec(length=32, types=None, count=1000, dim=2, seed=1))}
    if not (labels <= {x + y for x in "cbf" for y in "cbf"} and len(labels) == 9):
        failures.append(f"cbf labels {sorted(labels)}")

    outside = 0
    for rng in datagen.child_rngs(3, 10_000):
        s = datagen.ram_base(64, 2, 75.0, rng)
        outside += int((np.linalg.norm(s, axis=1) > 75.0).sum())
    if outside:
        failures.append(f"{outside} RAM points outside the ball")

    rng = np.random.default_rng(9)
    endpoint_bad = 0
    poly_worst = 0.0
    cap_bad = 0
    for _ in range(1000):
        base = datagen.ram_base(int(rng.integers(2, 60)), int(rng.integers(1, 4)), 75.0, rng)
        warped = datagen.time_distortion(base, rng)
        endpoint_bad += not (np.array_equal(warped[0], base[0]) and np.array_equal(warped[-1], base[-1]))
        poly_worst = max(poly_worst, float(_polyline_distance(warped, base).max()))
        shifted = datagen.space_distortion(warped, 5.0, rng)
        cap_bad += int((np.linalg.norm(shifted - warped, axis=1) > 5.0).sum())
    if endpoint_bad or poly_worst > 1e-9 or cap_bad:
        failures.append(f"time/space distortion: {endpoint_bad} endpoint, {poly_worst:.1e} polyline, {cap_bad} cap")

    verdict(7, not failures,
            f"cbf max error {cbf_err:.1e}, {len(labels)} dim-2 labels, {outside} RAM points outside, "
            f"{endpoint_bad} endpoint changes, polyline max {poly_worst:.1e}, {cap_bad} cap breaches"
            + (f" ({'; '.join(failures)})" if failures else ""))


# -- 8 -------------------------------------------------------------------------


def test_determinism(tmp_path, capsys):
    gens = {
        "random-seq": ["--count", "300", "--len", "1:64"],
        "random-set": ["--count", "300", "--card", "1:16"],
        "cbf": ["--count", "50", "--len", "32", "--types", "cbf"],
        "ram": ["--classes", "4", "--per-class", "5", "--len", "30"],
    }
    differing = []
    for kind, flags in gens.items():
        outs = []
        for rep in range(2):
            path = tmp_path / f"{kind}-{rep}.jsonl"
            assert main(["gen", kind, *flags, "--seed", "11", "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        if outs[0] != outs[1]:
            differing.append(kind)
    cropped = []
    for rep in range(2):
        path = tmp_path / f"crop-{rep}.jsonl"
        main(["gen", "crop", "--data", str(tmp_path / "random-seq-0.jsonl"), "--len", "1:9", "--seed", "3",
              "--out", str(path)])
        cropped.append(path.read_bytes())
    if cropped[0] != cropped[1]:
        differing.append("crop")

    bench_diff = []
    fixed_cols = [i for i, name in enumerate(REPORT_HEADER) if name not in ("build_s", "query_s_mean")]
    for data, distance, extra in (("random-seq-0", "sdk", ["--k", "5"]), ("random-set-0", "shd", ["--radius", "0.1"])):
        results, rows = [], []
        for rep in range(2):
            res = tmp_path / f"{distance}-res-{rep}.jsonl"
            rep_csv = tmp_path / f"{distance}-{rep}.csv"
            code = main(["bench", "--data", str(tmp_path / f"{data}.jsonl"), "--distance", distance, *extra,
                         "--queries", "30", "--seed", "5", "--capacity", "16", "--workers", "2",
                         "--results", str(res), "--report", str(rep_csv)])
            assert code == 0
            results.append(res.read_bytes())
            row = list(csv.reader(rep_csv.open()))[1]
            rows.append([row[i] for i in fixed_cols])
        if results[0] != results[1] or rows[0] != rows[1]:
            bench_diff.append(distance)
    capsys.readouterr()
    verdict(8, not differing and not bench_diff,
            f"gen reruns byte-identical for {', '.join(list(gens) + ['crop'])} "
            f"(differing: {differing or 'none'}); bench result sets and non-timing report columns identical "
            f"(differing: {bench_diff or 'none'})")
