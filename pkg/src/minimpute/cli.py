"""``minimpute analyze|impute|bench``.

Exit codes: 0 ok, 1 input error, 2 analysis cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys

from .bench import ExperimentConfig, analyze, dumps, load, parse_imputer, resolve_data, run_experiment, summary_line
from .dataset import CapExceeded, DataError
from .imputers import impute

EXIT_OK, EXIT_INPUT, EXIT_CAP = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _u32(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**32:
        raise argparse.ArgumentTypeError("cap must fit in an unsigned 32-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--task", choices=("svm", "linreg"), default="svm")
    common.add_argument("--data", default="builtin:breast_cancer", help="CSV path or builtin:<name>")
    common.add_argument("--label", help="label column (implied for builtin datasets)")
    common.add_argument("--null-markers", default=",null,NA,nan", help="comma-separated null tokens")
    common.add_argument("--bounds", default="observed", help="observed | global:lo,hi | file:<path>")
    common.add_argument("--C", type=float, default=1.0, help="SVM regularization")
    common.add_argument("--epsilon", type=float, default=0.1, help="LR relevance threshold")
    common.add_argument("--tol", type=float, default=1e-9, help="SVM solver tolerance")
    common.add_argument("--max-iter", type=int, default=100_000, help="SVM sweep limit")
    common.add_argument("--method", choices=("exact", "approx"), default="approx")
    common.add_argument("--imputer", default="mean", help="mean | knn:<k>")
    common.add_argument("--seed", type=_u64, default=0)
    common.add_argument("--cap", type=_u32, default=None, help="exact-mode limit on missing cells (SVM) or features (LR)")
    common.add_argument("--intercept", action="store_true", help="append a constant feature")
    common.add_argument("--placeholder", choices=("mean", "midpoint"), default="mean")
    common.add_argument("--arbitrary-fill", choices=("midpoint", "lo", "hi"), default="midpoint",
                        help="value for missing cells outside the minimal set")
    common.add_argument("--test-fraction", type=float, default=0.2)
    common.add_argument("--timings", action="store_true", help="include wall-clock seconds in the JSON")
    common.add_argument("--out", help="output path (default stdout)")

    p = _Parser(prog="minimpute", description="Find and impute only the missing values that matter.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("analyze", parents=[common], help="report the minimal imputation set")
    imp = sub.add_parser("impute", parents=[common], help="write the imputed dataset as CSV")
    imp.add_argument("--scope", choices=("minimal", "all"), default="minimal")
    sub.add_parser("bench", parents=[common], help="compare full and minimal imputation end to end")
    return p


def config_from_args(args) -> ExperimentConfig:
    return ExperimentConfig(
        task=args.task,
        data=args.data,
        label=args.label,
        null_markers=tuple(args.null_markers.split(",")),
        bounds=args.bounds,
        C=args.C,
        epsilon=args.epsilon,
        tol=args.tol,
        max_iter=args.max_iter,
        imputer=args.imputer,
        method=args.method,
        cap=args.cap,
        seed=args.seed,
        test_fraction=args.test_fraction,
        intercept=args.intercept,
        placeholder=args.placeholder,
        arbitrary_fill=args.arbitrary_fill,
        timings=args.timings,
    )


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _analyze(config, args) -> str:
    X, y = load(config)
    report = analyze(X, y, config)
    out = report.to_dict(timings=config.timings)
    out["config"] = config.echo()
    n = len(report.members) + len(report.skipped)
    print(f"{report.kind}: {len(report.members)} of {n} incomplete need imputation", file=sys.stderr)
    return dumps(out)


def _impute(config, args) -> str:
    X, y = load(config)
    method, k = parse_imputer(config.imputer)
    scope = "all" if args.scope == "all" else analyze(X, y, config)
    res = impute(X, method, scope, k=k or 5, out_of_scope=config.arbitrary_fill)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    _, label = resolve_data(config.data, config.label)
    w.writerow([*X.feature_names, label])
    for row, lab in zip(res.values, y.y):
        w.writerow([repr(float(v)) for v in row] + [repr(float(lab))])
    print(
        f"imputed {len(res.imputed)} cells, {len(res.arbitrary)} left at an arbitrary in-bounds value",
        file=sys.stderr,
    )
    return buf.getvalue()


def _bench(config, args) -> str:
    run = run_experiment(config)
    print(summary_line(run), file=sys.stderr)
    return dumps(run)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        text = {"analyze": _analyze, "impute": _impute, "bench": _bench}[args.command](config, args)
        _emit(text, args.out)
    except CapExceeded as e:
        print(f"minimpute: {e} (or raise --cap)", file=sys.stderr)
        return EXIT_CAP
    except (DataError, ValueError, OSError, KeyError) as e:
        print(f"minimpute: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
