"""Command line: ``supermtree {gen,bench,query,validate}``.

Exit codes: 0 ok, 1 usage, 2 data error, 3 verification failure.
The default seed comes from ``SUPERMTREE_SEED`` (0 if unset).
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys

import numpy as np

from . import datagen
from .bench import append_report, build_tree, holdout, run_bench, write_results
from .distances import get_space
from .records import DataError, Record, read_records, write_records
from .scan import LinearScan
from .space import check_chain_triangle
from .tree import SplitPolicy, TreeConfig

log = logging.getLogger("supermtree")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3
SEED_ENV = "SUPERMTREE_SEED"
DISTANCE_KIND = {"l2win": "series", "sdk": "series", "shd": "set"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _range(text: str) -> tuple[int, int]:
    try:
        lo, _, hi = text.partition(":")
        lo, hi = int(lo), int(hi or lo)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if not 1 <= lo <= hi:
        raise argparse.ArgumentTypeError(f"need 1 <= LO <= HI, got {text!r}")
    return lo, hi


def _write(records, out: str) -> int:
    if out == "-":
        return write_records(records, sys.stdout)
    return write_records(records, out)


# -- gen ---------------------------------------------------------------------


def cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        if args.kind in ("random-seq", "random-set"):
            lo, hi = args.len if args.kind == "random-seq" else args.card
            spec = datagen.RandomSpec(
                count=args.count, min_size=lo, max_size=hi, low=args.low, high=args.high,
                dim=getattr(args, "dim", 1), integer=args.integer, seed=seed,
            )
            records = datagen.random_sequences(spec) if args.kind == "random-seq" else datagen.random_sets(spec)
        elif args.kind == "cbf":
            spec = datagen.CbfSpec(length=args.len, types=args.types, count=args.count, dim=args.dim, seed=seed)
            records = datagen.cbf_dataset(spec)
        elif args.kind == "ram":
            spec = datagen.RamSpec(
                classes=args.classes, per_class=args.per_class, length=args.len, dim=args.dim,
                radius=args.radius, distortion=args.distortion, include_base=args.include_base, seed=seed,
            )
            records = datagen.ram_dataset(spec)
        else:  # crop
            lo, hi = args.len
            records = datagen.crop(read_records(args.data), lo, hi, seed)
    except DataError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    n = _write(records, args.out)
    msg = f"wrote {n} records (seed {seed})"
    print(msg, file=sys.stderr if args.out == "-" else sys.stdout)
    return EXIT_OK


# -- shared helpers ----------------------------------------------------------


def _load(path: str, distance: str) -> list[Record]:
    records = read_records(path)
    want = DISTANCE_KIND[distance]
    if records and records[0].kind != want:
        raise UsageError(f"distance {distance!r} needs {want} records, {path} holds {records[0].kind}")
    return records


def _config(args) -> TreeConfig:
    try:
        return TreeConfig(capacity=args.capacity, split_policy=SplitPolicy(args.policy))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_dims(records: list[Record], queries: list[Record]) -> None:
    dims = {r.obj.shape[1] for r in itertools.chain(records, queries) if r.kind == "series"}
    if len(dims) > 1:
        raise DataError(f"mixed series dimensionality {sorted(dims)}")


# -- bench -------------------------------------------------------------------


def cmd_bench(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    space = get_space(args.distance)
    records = _load(args.data, args.distance)
    if args.query_data:
        queries = _load(args.query_data, args.distance)
    else:
        try:
            records, queries = holdout(records, args.queries, seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    _check_dims(records, queries)
    k = None if args.radius is not None else args.k
    result = run_bench(space, records, queries, _config(args), k=k, radius=args.radius, workers=args.workers)
    if args.report:
        append_report(args.report, [result.row])
    if args.results:
        write_results(args.results, queries, result.tree_results)
    print(json.dumps(result.summary(), sort_keys=True))
    if not result.row.equivalent:
        print(f"tree and scan disagree on queries {result.mismatches}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# -- query -------------------------------------------------------------------


def cmd_query(args) -> int:
    space = get_space(args.distance)
    records = _load(args.data, args.distance)
    queries = _load(args.q, args.distance)
    if len(queries) != 1:
        raise DataError(f"{args.q} must hold exactly one query record, found {len(queries)}")
    _check_dims(records, queries)
    q = queries[0].obj
    if args.engine == "scan":
        scan = LinearScan(space, [r.item for r in records])
        res = scan.range(q, args.radius) if args.radius is not None else scan.knn(q, args.k)
    else:
        tree, _ = build_tree(space, records, _config(args))
        res = tree.range_query(q, args.radius) if args.radius is not None else tree.knn_query(q, args.k)
    for n in res:
        print(f"{n.id},{n.distance!r}")
    return EXIT_OK


# -- validate ----------------------------------------------------------------


def cmd_validate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    space = get_space(args.distance)
    records = _load(args.data, args.distance)
    tree, build_s = build_tree(space, records, _config(args))
    problems = tree.validate()

    triangle_failures = 0
    checked = 0
    if len(records) >= 3:
        rng = np.random.default_rng(seed)
        for _ in range(args.triples):
            picks = sorted((records[i].obj for i in rng.choice(len(records), 3, replace=False)), key=space.size)
            checked += 1
            if not check_chain_triangle(space, *picks):
                triangle_failures += 1
    if triangle_failures:
        problems.append(f"chain triangle inequality failed on {triangle_failures} of {checked} triples")

    report = {
        "records": len(records),
        "distance": space.name,
        "build_s": build_s,
        "stats": tree.stats().to_dict(),
        "triples_checked": checked,
        "violations": problems,
    }
    print(json.dumps(report, sort_keys=True))
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _tree_args(p) -> None:
    p.add_argument("--distance", required=True, choices=sorted(DISTANCE_KIND))
    p.add_argument("--policy", default="large", choices=[s.value for s in SplitPolicy])
    p.add_argument("--capacity", type=int, default=128)


def _query_args(p) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--k", type=int, default=1)
    group.add_argument("--radius", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="supermtree", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate a JSON-Lines dataset")
    gsub = gen.add_subparsers(dest="kind", required=True, parser_class=_Parser)

    def common(p, count=True):
        if count:
            p.add_argument("--count", type=int, required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", default="-", help="output path, '-' for stdout")

    p = gsub.add_parser("random-seq", help="random sequences with uniform lengths")
    common(p)
    p.add_argument("--len", type=_range, default=(1, 128))
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--low", type=float, default=0.0)
    p.add_argument("--high", type=float, default=1.0)
    p.add_argument("--integer", action="store_true")

    p = gsub.add_parser("random-set", help="random sets with uniform cardinalities")
    common(p)
    p.add_argument("--card", type=_range, default=(1, 32))
    p.add_argument("--low", type=float, default=0.0)
    p.add_argument("--high", type=float, default=1.0)
    p.add_argument("--integer", action="store_true")

    p = gsub.add_parser("cbf", help="cylinder-bell-funnel series")
    common(p)
    p.add_argument("--len", type=int, default=128)
    p.add_argument("--types", help="type per dimension, e.g. 'cb'; random per record if omitted")
    p.add_argument("--dim", type=int, default=1, help="dimensionality when --types is omitted")

    p = gsub.add_parser("ram", help="random accelerated motion classes")
    common(p, count=False)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--len", type=int, default=100)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--radius", type=float, default=75.0)
    p.add_argument("--distortion", type=float, default=5.0)
    p.add_argument("--include-base", action="store_true")

    p = gsub.add_parser("crop", help="cut series down to random subsequences")
    common(p, count=False)
    p.add_argument("--data", required=True)
    p.add_argument("--len", type=_range, default=(1, 128))
    gen.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="time tree against linear scan, verifying results")
    p.add_argument("--data", required=True)
    _tree_args(p)
    _query_args(p)
    p.add_argument("--queries", type=int, default=100, help="records held out as queries")
    p.add_argument("--query-data", help="query records instead of held-out ones")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--report", help="CSV file to append a row to")
    p.add_argument("--results", help="write per-query tree results as JSON-Lines")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("query", help="answer one query, printing id,distance lines")
    p.add_argument("--data", required=True)
    p.add_argument("--q", required=True, help="file with one query record")
    _tree_args(p)
    _query_args(p)
    p.add_argument("--engine", default="tree", choices=["tree", "scan"])
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("validate", help="build the tree and check its invariants")
    p.add_argument("--data", required=True)
    _tree_args(p)
    p.add_argument("--triples", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"supermtree: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"supermtree: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"supermtree: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
