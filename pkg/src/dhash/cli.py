"""Command-line driver: train, encode, query, eval, bench, stability.

One binary with subcommands; every run with a ``--seed`` is deterministic
end to end. Exit codes: 0 success, 1 runtime or numeric failure (the
message names the failing step), 2 usage error. The ``DH_THREADS``
environment variable caps the BLAS worker count.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from contextlib import nullcontext

import numpy as np
from threadpoolctl import threadpool_limits

from . import dataset, fsdh, hamming, metrics, model_io, sdh, stability, synth
from .errors import DhashError


class UsageError(DhashError):
    """Semantic flag problem detected after parsing (mapped to exit 2)."""


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        values = [int(p) for p in text.split(",") if p]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_data_flags(p: argparse.ArgumentParser, queries: bool = False) -> None:
    p.add_argument("--features", help="feature matrix file")
    p.add_argument("--labels", help="label file, one id per line")
    p.add_argument("--format", choices=("csv", "raw"), default="csv",
                   help="feature file format (default csv)")
    p.add_argument("--header", action="store_true",
                   help="skip one leading CSV header line")
    p.add_argument("--label-col", choices=("last",), default=None,
                   help="take labels from the last feature column")
    if queries:
        p.add_argument("--query-features", help="query feature matrix file")
        p.add_argument("--query-labels", help="query label file")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=("fsdh", "sdh"), default="fsdh")
    p.add_argument("--bits", type=_positive_int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--nu", type=float, default=1e-5)
    p.add_argument("--iters", type=_positive_int, default=5)
    p.add_argument("--anchors", type=_positive_int, default=1000)
    p.add_argument("--sigma", default="mean",
                   help="kernel width rule: mean, median or fixed:<v>")
    p.add_argument("--max-sweeps", type=_positive_int, default=5,
                   help="DCC sweep cap (sdh only)")


def _load_features_labels(args, need_labels: bool):
    """Resolve --synth / --features / --labels into (X, labels-or-None)."""
    if getattr(args, "synth", None):
        spec = synth.parse_synth_spec(args.synth)
        X, labels, _ = synth.generate(spec, args.seed)
        return X, labels
    if not args.features:
        raise UsageError("either --features or --synth is required")
    X = dataset.load_features(args.features, args.format, args.header)
    labels = None
    if args.label_col == "last":
        X, labels = dataset.split_label_column(X)
    elif args.labels:
        labels = dataset.load_labels(args.labels)
    if need_labels and labels is None:
        raise UsageError("labels required: pass --labels or --label-col last")
    return X, labels


def _train_one(X, labels, args):
    config = fsdh.TrainConfig(
        bits=args.bits, lam=args.lam, nu=args.nu, max_iters=args.iters,
        anchors=args.anchors, seed=args.seed, sigma_rule=args.sigma,
    )
    if args.method == "sdh":
        dcc = sdh.DccConfig(max_sweeps=args.max_sweeps)
        return sdh.sdh_train(X, dataset.one_hot_encode(labels), config, dcc)
    return fsdh.train(X, dataset.one_hot_encode(labels), config)


def cmd_train(args) -> int:
    X, labels = _load_features_labels(args, need_labels=True)
    model, B, trace = _train_one(X, labels, args)

    model_io.save_model(args.out, model)
    codes_out = args.codes_out or f"{args.out}.codes"
    hamming.save_codes(codes_out, hamming.pack_codes(B), model.config.bits, labels)
    trace_out = args.trace_out or f"{args.out}.trace.csv"
    trace.save_csv(trace_out)

    train_s = trace.init_seconds + trace.step_seconds()
    print(f"trained {args.method} bits={args.bits} n={X.shape[0]} "
          f"iterations={trace.iterations} converged={trace.converged} "
          f"train_s={train_s:.3f}")
    print(f"wrote {args.out}, {codes_out}, {trace_out}")
    return 0


def cmd_encode(args) -> int:
    model = model_io.load_model(args.model)
    X, labels = _load_features_labels(args, need_labels=False)
    B = fsdh.encode(X, model)
    hamming.save_codes(args.out, hamming.pack_codes(B), model.config.bits, labels)
    print(f"encoded {B.shape[0]} rows at {model.config.bits} bits -> {args.out}")
    return 0


def cmd_query(args) -> int:
    packed, bits, labels = hamming.load_codes(args.index)
    if labels is None:
        labels = np.zeros(packed.shape[0], dtype=np.int64)
    index = hamming.PackedIndex(codes=packed, bits=bits, labels=labels)
    q_packed, q_bits, _ = hamming.load_codes(args.queries)
    if q_bits != bits:
        raise UsageError(f"query codes have {q_bits} bits, index has {bits}")

    if args.mode == "radius":
        if args.r is None:
            raise UsageError("radius mode requires --r")
        for i in range(q_packed.shape[0]):
            ids = hamming.radius_lookup(index, q_packed[i], args.r)
            d = hamming.distances_to(index.codes, q_packed[i])
            cells = " ".join(f"{j}:{d[j]}" for j in ids)
            print(f"query {i}: {cells}")
    else:
        if args.n is None:
            raise UsageError("topn mode requires --n")
        if args.n > index.size:
            raise UsageError(f"--n {args.n} exceeds database size {index.size}")
        for i in range(q_packed.shape[0]):
            ids, dists = hamming.rank_top_n(index, q_packed[i], args.n)
            cells = " ".join(f"{j}:{d}" for j, d in zip(ids, dists))
            print(f"query {i}: {cells}")
    return 0


def _train_seconds_from_trace(path) -> float:
    total = 0.0
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        cols = {name: k for k, name in enumerate(header)}
        for line in fh:
            cells = line.strip().split(",")
            for name in ("b_step_ms", "g_step_ms", "f_step_ms"):
                cell = cells[cols[name]]
                if cell:
                    total += float(cell) / 1e3
    return total


def cmd_eval(args) -> int:
    model = model_io.load_model(args.model)
    X_db, db_labels = _load_features_labels(args, need_labels=True)

    q_args = argparse.Namespace(
        synth=None, features=args.query_features, labels=args.query_labels,
        format=args.format, header=args.header, label_col=None, seed=args.seed,
    )
    X_q, q_labels = _load_features_labels(q_args, need_labels=True)

    index = hamming.PackedIndex.from_codes(fsdh.encode(X_db, model), db_labels)

    t0 = time.perf_counter()
    q_codes = hamming.pack_codes(fsdh.encode(X_q, model))
    for i in range(q_codes.shape[0]):
        hamming.radius_lookup(index, q_codes[i], args.radius)
    test_seconds = time.perf_counter() - t0

    train_seconds = (
        _train_seconds_from_trace(args.trace) if args.trace else float("nan")
    )
    report = metrics.evaluate(
        index, q_codes, q_labels, method=model.method, bits=model.config.bits,
        radius=args.radius, top_n=args.topn,
        train_seconds=train_seconds,
        test_seconds_per_query=test_seconds / q_codes.shape[0],
    )
    print(report.csv_header())
    print(report.csv_row())
    if args.out:
        with open(f"{args.out}.json", "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
        with open(f"{args.out}.csv", "w", encoding="utf-8") as fh:
            fh.write(report.csv_header() + "\n" + report.csv_row() + "\n")
        print(f"wrote {args.out}.json, {args.out}.csv")
    return 0


def cmd_bench(args) -> int:
    spec = synth.parse_synth_spec(args.synth)
    X, labels, _ = synth.generate(spec, args.seed)
    parts = dataset.split(X, labels, args.test_fraction, args.seed, stratified=True)

    rows = []
    header = None
    for bits in args.bits:
        for method in ("fsdh", "sdh"):
            run_args = argparse.Namespace(
                method=method, bits=bits, lam=args.lam, nu=args.nu,
                iters=args.iters, anchors=args.anchors, seed=args.seed,
                sigma=args.sigma, max_sweeps=args.max_sweeps,
            )
            model, B, trace = _train_one(parts.train_X, parts.train_labels, run_args)
            index = hamming.PackedIndex.from_codes(B, parts.train_labels)

            t0 = time.perf_counter()
            q_codes = hamming.pack_codes(fsdh.encode(parts.test_X, model))
            for i in range(q_codes.shape[0]):
                hamming.radius_lookup(index, q_codes[i], args.radius)
            test_seconds = time.perf_counter() - t0

            train_s, test_per_q = metrics.timing_report(
                trace, test_seconds, q_codes.shape[0]
            )
            report = metrics.evaluate(
                index, q_codes, parts.test_labels, method=method, bits=bits,
                radius=args.radius, top_n=args.topn,
                train_seconds=train_s, test_seconds_per_query=test_per_q,
            )
            header = report.csv_header()
            rows.append(report.csv_row())
            print(f"{method} bits={bits}: map={report.map:.4f} "
                  f"train_s={train_s:.3f}")

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        fh.write("\n".join(rows) + "\n")
    print(f"wrote {args.out}")
    return 0


def cmd_stability(args) -> int:
    spec = synth.parse_synth_spec(args.synth)
    mixture = synth.make_mixture(spec.k, spec.d, spec.spread, args.seed)
    config = stability.StabilityConfig(
        lambda_prime=args.lambda_prime, nu_prime=args.nu_prime,
        replacements=args.replacements, sample_sizes=tuple(args.sizes),
        bits=args.bits, seed=args.seed,
    )
    reports = stability.run_sweep(mixture, config)

    csv_lines = stability.sweep_csv_lines(reports)
    for line in csv_lines:
        print(line)
    if args.out:
        import json

        with open(f"{args.out}.json", "w", encoding="utf-8") as fh:
            json.dump([r.to_dict() for r in reports], fh, indent=2)
            fh.write("\n")
        with open(f"{args.out}.csv", "w", encoding="utf-8") as fh:
            fh.write("\n".join(csv_lines) + "\n")
        print(f"wrote {args.out}.json, {args.out}.csv")
    total_violations = sum(r.violations for r in reports)
    return 0 if total_violations == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dhash",
        description="Supervised discrete hashing: training, retrieval, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a hash model")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--synth", help="synthetic data spec, e.g. clusters:k=10,n=5000,d=64,spread=1.0")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--codes-out", help="training codes file (default <out>.codes)")
    p.add_argument("--trace-out", help="trace CSV (default <out>.trace.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", help="encode features with a trained model")
    _add_data_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="codes file to write")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("query", help="Hamming lookups against a codes file")
    p.add_argument("--index", required=True, help="database codes (DHCB)")
    p.add_argument("--queries", required=True, help="query codes (DHCB)")
    p.add_argument("--mode", choices=("radius", "topn"), required=True)
    p.add_argument("--r", type=int, help="Hamming radius (radius mode)")
    p.add_argument("--n", type=_positive_int, help="result count (topn mode)")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="full metric report for a model on a query set")
    _add_data_flags(p, queries=True)
    p.add_argument("--model", required=True)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--topn", type=_positive_int, default=500)
    p.add_argument("--trace", help="training trace CSV to read train time from")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output prefix for <out>.json and <out>.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="FSDH vs SDH sweep over bit counts")
    p.add_argument("--synth", default="clusters:k=10,n=5000,d=64,spread=1.0")
    p.add_argument("--bits", type=_int_list, default=[16, 32, 64, 96, 128],
                   help="comma-separated bit counts")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--nu", type=float, default=1e-5)
    p.add_argument("--iters", type=_positive_int, default=5)
    p.add_argument("--anchors", type=_positive_int, default=1000)
    p.add_argument("--sigma", default="mean")
    p.add_argument("--max-sweeps", type=_positive_int, default=5)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--topn", type=_positive_int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="comparison CSV to write")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stability", help="replace-one stability experiment")
    p.add_argument("--synth", default="clusters:k=5,n=500,d=16,spread=1.0")
    p.add_argument("--sizes", type=_int_list, default=[100, 400, 1600],
                   help="sample sizes to sweep")
    p.add_argument("--replacements", type=_positive_int, default=50)
    p.add_argument("--lambda-prime", type=float, default=1.0)
    p.add_argument("--nu-prime", type=float, default=1e-5)
    p.add_argument("--bits", type=_positive_int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output prefix for <out>.json and <out>.csv")
    p.set_defaults(func=cmd_stability)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    cap = os.environ.get("DH_THREADS")
    limiter = threadpool_limits(limits=int(cap)) if cap else nullcontext()
    try:
        with limiter:
            return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except DhashError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
