"""``corrmetric`` command line.

Exit codes: 0 success, 1 inequality violation found, 2 usage or parse error,
3 degenerate (constant) data.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .core import Sample, pairwise_matrix
from .errors import CorrMetricError, ZeroVariance
from .index import STRATEGIES, IndexConfig, QmIndex
from .quasi import RelaxConfig, find_counterexample, sweep_grid, sweep_random

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_DEGENERATE = 0, 1, 2, 3
THREADS_ENV = "CORRMETRIC_THREADS"


class UsageError(Exception):
    pass


@dataclass
class Dataset:
    samples: list
    dimension: int


def read_dataset(path, header: bool = False, id_col: bool = False) -> Dataset:
    """Parse a comma-separated file with one sample per row.

    No quoting, '.' decimals, optional single header line, optional leading
    id column.  Raises UsageError naming the 1-based line and column.
    """
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if header and lines:
        lines = lines[1:]
        first_line = 2
    else:
        first_line = 1
    samples, width = [], None
    for offset, line in enumerate(lines):
        lineno = first_line + offset
        if not line.strip():
            continue
        fields = line.split(",")
        sid = len(samples)
        if id_col:
            sid, fields = fields[0].strip(), fields[1:]
        values = []
        for col, raw in enumerate(fields, start=2 if id_col else 1):
            try:
                v = float(raw)
            except ValueError:
                raise UsageError(f"{path}: line {lineno}, column {col}: cannot parse {raw!r}") from None
            if not math.isfinite(v):
                raise UsageError(f"{path}: line {lineno}, column {col}: non-finite value {raw!r}")
            values.append(v)
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise UsageError(f"{path}: line {lineno}: {len(values)} values, expected {width}")
        if len(values) < 2:
            raise UsageError(f"{path}: line {lineno}: a sample needs at least 2 values")
        samples.append(Sample(values, id=sid))
    if not samples:
        raise UsageError(f"{path}: no samples")
    return Dataset(samples, width)


def _warn_dimension(ds: Dataset):
    if ds.dimension == 2:
        print("warning: n=2, every centered sample is collinear so all distances are 0",
              file=sys.stderr)


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _emit(text: str, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def fmt(v: float) -> str:
    return format(v, ".12g")


def cmd_dist(args) -> int:
    ds = read_dataset(args.input, args.header, args.id_col)
    _warn_dimension(ds)
    m = pairwise_matrix(ds.samples)
    _emit("".join(",".join(fmt(v) for v in row) + "\n" for row in m), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = RelaxConfig(k=args.k)
    if args.mode == "grid":
        if args.step is None:
            raise UsageError("--mode grid requires --step")
        report = sweep_grid(args.step, cfg)
    else:
        if args.trials is None or args.dim is None:
            raise UsageError("--mode random requires --trials and --dim")
        report = sweep_random(args.dim, args.trials, args.seed, cfg, workers=_threads())
    _emit(report.to_json() + "\n", args.out)
    if report.violated:
        t = report.argmax
        print(f"violation: ratio {report.max_ratio:.12g} > k={args.k} at "
              f"alpha={t.alpha:.12g}, beta={t.beta:.12g}, gamma={t.gamma:.12g}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_counterexample(args) -> int:
    if not (0 < args.k < 2):
        raise UsageError("no counterexample exists (Theorem: K=2 is sharp)"
                         if args.k >= 2 else f"k must be positive, got {args.k}")
    t, (x, y, z), ratio = find_counterexample(args.k)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "k": args.k,
        "triple": t.as_dict(),
        "vectors": {"X": x.values.tolist(), "Y": y.values.tolist(), "Z": z.values.tolist()},
        "ratio": ratio,
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _index_config(args) -> IndexConfig:
    return IndexConfig(strategy=args.strategy, k_constant=args.k_constant,
                       leaf_size=args.leaf_size, seed=args.seed)


def cmd_build(args) -> int:
    ds = read_dataset(args.data, args.header, args.id_col)
    _warn_dimension(ds)
    index = QmIndex.build(ds.samples, _index_config(args))
    _emit(index.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_knn(args) -> int:
    if (args.index is None) == (args.data is None):
        raise UsageError("give exactly one of --index or --data")
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    if args.index is not None:
        try:
            index = QmIndex.from_json(Path(args.index).read_text())
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"cannot load index {args.index}: {exc}") from exc
        if args.strategy is not None:
            index.config = IndexConfig(strategy=args.strategy, k_constant=index.config.k_constant,
                                       leaf_size=index.config.leaf_size, seed=index.config.seed)
    else:
        ds = read_dataset(args.data, args.header, args.id_col)
        _warn_dimension(ds)
        args.strategy = args.strategy or "relaxed-k"
        index = QmIndex.build(ds.samples, _index_config(args))
    queries = read_dataset(args.query, args.header, args.id_col)
    if queries.dimension != index.dimension:
        raise UsageError(f"query dimension {queries.dimension} != corpus dimension {index.dimension}")
    lines = []
    for q in queries.samples:
        try:
            res = index.knn(q, args.k)
        except ZeroVariance as exc:
            raise ZeroVariance(f"query {q.id!r} has zero variance", sample_id=q.id) from exc
        lines.append(json.dumps({
            "query_id": q.id,
            "neighbors": [{"id": i, "distance": d} for i, d in res.neighbors],
            "distance_evaluations": res.distance_evaluations,
        }) + "\n")
    _emit("".join(lines), args.out)
    return EXIT_OK


def _add_csv_flags(p):
    p.add_argument("--header", action="store_true", help="skip the first line")
    p.add_argument("--id-col", action="store_true", help="first column holds sample ids")


def _add_index_flags(p, strategy_default):
    p.add_argument("--strategy", choices=STRATEGIES, default=strategy_default)
    p.add_argument("--k-constant", type=float, default=2.0)
    p.add_argument("--leaf-size", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrmetric", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="pairwise absolute correlation distance matrix")
    p.add_argument("input")
    p.add_argument("--out")
    _add_csv_flags(p)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("verify", help="sweep the relaxed triangle inequality ratio")
    p.add_argument("--mode", choices=("grid", "random"), required=True)
    p.add_argument("--step", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=float, default=2.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("counterexample", help="vectors violating the inequality for K < 2")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("build", help="build and serialize a vantage-point index")
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    _add_csv_flags(p)
    _add_index_flags(p, "relaxed-k")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("knn", help="exact k nearest neighbors for each query row")
    p.add_argument("--index")
    p.add_argument("--data")
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--out")
    _add_csv_flags(p)
    _add_index_flags(p, None)
    p.set_defaults(func=cmd_knn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ZeroVariance as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except CorrMetricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
