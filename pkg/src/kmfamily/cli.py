"""Command-line entry point.

Exit codes: 0 success, 2 bad flags, 3 data error, 4 infeasible K.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time

from . import bench
from .core import DataError, InfeasibleKError, TerminationConfig, total_distortion
from .dkm import run_dkm
from .ikm import run_ikm
from .ingest import CsvOptions, atomic_write, fmt, iter_enlarged, load_csv, read_table
from .lloyd import run_km
from .twophase import LEARNERS, run_2pk_sequential, run_par2pk

EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 2, 3, 4


def _int_list(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _shared(p: argparse.ArgumentParser, input_required=True):
    p.add_argument("--input", required=input_required, help="CSV file of numeric rows")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--header", action="store_true", help="first row is a header")
    p.add_argument("--drop-columns", default="", help="comma-separated column names or 0-based indices")
    p.add_argument("--attribute-limit", type=int, default=None, help="keep only the first N retained columns")
    p.add_argument("--max-iters", type=int, default=20)
    p.add_argument("--epsilon", type=float, default=1e-7)
    p.add_argument("--seed", type=int, default=0)


def _segmenting(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--segment-len", type=int, help="objects per segment")
    g.add_argument("--segments", type=int, help="number of segments; length is ceil(n / segments)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kmfamily", description="K-means family clustering and benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cluster", help="cluster one data set")
    _shared(c)
    c.add_argument("--algorithm", required=True, choices=["km", "ikm", "dkm", "2pk", "par2pk"])
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--kt", type=int, help="centers per segment for 2pk/par2pk (default K)")
    _segmenting(c)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--phase1-learner", choices=LEARNERS, default="ikm")
    c.add_argument("--out", required=True)

    b = sub.add_parser("bench", help="optimality ratios and running times over a K grid")
    _shared(b)
    b.add_argument("--k-min", type=int, required=True)
    b.add_argument("--k-max", type=int, required=True)
    b.add_argument("--trials", type=int, default=100)
    b.add_argument("--timing-repeats", type=int, default=5)
    b.add_argument("--algorithms", default="km,ikm,dkm")
    b.add_argument("--out-dir", required=True)

    e = sub.add_parser("enlarge", help="replicate rows with Gaussian noise")
    _shared(e)
    e.add_argument("--factor", type=int, required=True)
    e.add_argument("--noise-scale", type=float, default=0.05)
    e.add_argument("--out", required=True)

    s = sub.add_parser("speedup", help="Par2PK-means wall time versus worker count")
    _shared(s)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--kt", type=int, required=True)
    _segmenting(s)
    s.add_argument("--workers-list", type=_int_list, default=[1, 2, 4, 8])
    s.add_argument("--repeats", type=int, default=5)
    s.add_argument("--out", required=True)
    return parser


def _csv_options(args) -> CsvOptions:
    return CsvOptions(args.delimiter, args.header, args.drop_columns, args.attribute_limit)


def _config(args) -> TerminationConfig:
    return TerminationConfig(args.max_iters, args.epsilon)


def _segment_length(args, n: int, kt: int) -> int:
    if args.segment_len is not None:
        return args.segment_len
    segments = args.segments if args.segments is not None else 100
    if segments < 1:
        raise ValueError("--segments must be positive")
    return max(kt, math.ceil(n / segments))


def cmd_cluster(args) -> int:
    data = load_csv(args.input, _csv_options(args))
    config = _config(args)
    payload = {"algorithm": args.algorithm, "k": args.k}
    start = time.perf_counter()
    if args.algorithm in ("2pk", "par2pk"):
        kt = args.kt or args.k
        length = _segment_length(args, data.n, kt)
        if args.algorithm == "2pk":
            clusters, report = run_2pk_sequential(data, args.k, kt, length, config, args.phase1_learner, args.seed)
        else:
            clusters, report = run_par2pk(data, args.k, kt, length, args.workers, config, args.phase1_learner, args.seed)
        payload.update(kt=kt, segment_length=length, segments=report.extras["segments"],
                       phase2_distortion=report.final_distortion)
    elif args.algorithm == "km":
        clusters, report = run_km(data.points, args.k, config, seed=args.seed)
    else:
        run = run_ikm if args.algorithm == "ikm" else run_dkm
        clusters, report = run(data.points, args.k, config)
    wall = time.perf_counter() - start
    payload.update(
        centers=clusters.centers.tolist(),
        weights=clusters.weights.tolist(),
        distortion=total_distortion(data.points, clusters),
        learn_calls=[{"kc": kc, "iters": it} for kc, it in report.learn_calls],
        wall_ms=1000.0 * wall,
    )
    atomic_write(args.out, lambda fh: (json.dump(payload, fh, indent=2), fh.write("\n")))
    print(f"{args.algorithm} K={args.k}: distortion {payload['distortion']:.6g} -> {args.out}")
    return 0


def cmd_bench(args) -> int:
    data = load_csv(args.input, _csv_options(args))
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    for a in algorithms:
        if a not in bench.ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    if args.k_min < 1 or args.k_max < args.k_min:
        raise ValueError("need 1 <= k-min <= k-max")
    stats, rows = bench.benchmark(data, range(args.k_min, args.k_max + 1), algorithms, args.trials,
                                  args.seed, _config(args), args.timing_repeats)
    bench.write_benchmark(args.out_dir, data.name, stats, rows)
    for r in rows:
        print(f"K={r.k:3d} " + " ".join(f"{a}={v:.4f}" for a, v in r.ratios.items()))
    return 0


def cmd_enlarge(args) -> int:
    opts = _csv_options(args)
    header, texts, x = read_table(args.input, opts)
    delim = args.delimiter

    def write(fh):
        if header is not None:
            fh.write(delim.join(header) + "\n")
        blocks = iter_enlarged(x, args.factor, args.noise_scale, args.seed)
        next(blocks)
        for cells in texts:
            fh.write(delim.join(cells) + "\n")
        for block in blocks:
            fh.writelines(delim.join(map(fmt, row)) + "\n" for row in block)

    atomic_write(args.out, write)
    print(x.shape[0] * args.factor)
    return 0


def cmd_speedup(args) -> int:
    data = load_csv(args.input, _csv_options(args))
    length = _segment_length(args, data.n, args.kt)
    rows = bench.speedup_experiment(data, args.k, args.kt, length, args.workers_list, args.repeats, _config(args))
    bench.write_lines(args.out, bench.SPEEDUP_HEADER, bench.speedup_csv_rows(data.name, rows))
    for r in rows:
        ref = " ".join(f"{label}={v}" for label, v in r["reference"].items() if v is not None)
        print(f"workers={r['workers']} median={r['median_ms']:.1f}ms speedup={r['speedup']:.3f}  published: {ref}")
    return 0


COMMANDS = {"cluster": cmd_cluster, "bench": cmd_bench, "enlarge": cmd_enlarge, "speedup": cmd_speedup}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InfeasibleKError as exc:
        print(f"infeasible K: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"invalid arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
