"""Experiment harness: analyze, impute (everything vs the minimal set), train, evaluate.

Pipeline A imputes every missing cell. Pipeline B imputes only the members of
the minimal set and gives the other missing cells an arbitrary in-bounds value.
Both are trained the same way and scored on a test split drawn from complete
examples.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (
    DataError,
    IncompleteMatrix,
    LabelVector,
    load_bounds_file,
    load_csv,
    infer_bounds,
)
from .datasets import BUILTIN, builtin_label, builtin_path
from .imputers import impute
from .linreg import train_ols
from .lr_minimal import DEFAULT_FEATURE_CAP, approx_minimal_features, exact_minimal_features_lr
from .report import SCHEMA_VERSION, MinimalSetReport
from .svm import SvmParams, train_svm
from .svm_minimal import DEFAULT_EDGE_CAP, approx_minimal_set_svm, exact_minimal_set_svm, miss_probabilities


@dataclass
class ExperimentConfig:
    task: str = "svm"
    data: str = "builtin:breast_cancer"
    label: str | None = None
    null_markers: tuple = ("", "null", "NA", "nan")
    bounds: str = "observed"
    C: float = 1.0
    epsilon: float = 0.1
    tol: float = 1e-9
    max_iter: int = 100_000
    imputer: str = "mean"
    method: str = "approx"
    cap: int | None = None
    seed: int = 0
    test_fraction: float = 0.2
    intercept: bool = False
    placeholder: str = "mean"
    arbitrary_fill: str = "midpoint"
    timings: bool = False

    def __post_init__(self):
        if self.task not in ("svm", "linreg"):
            raise DataError(f"task must be svm or linreg, got {self.task!r}")
        if self.method not in ("exact", "approx"):
            raise DataError(f"method must be exact or approx, got {self.method!r}")
        if not 0.0 < self.test_fraction < 1.0:
            raise DataError("test fraction must be in (0, 1)")
        if self.seed < 0:
            raise DataError("seed must be non-negative")
        if self.cap is not None and self.cap < 0:
            raise DataError("cap must be non-negative")
        parse_imputer(self.imputer)
        if self.arbitrary_fill not in ("midpoint", "lo", "hi"):
            raise DataError(f"arbitrary fill must be midpoint, lo or hi, got {self.arbitrary_fill!r}")
        self.null_markers = tuple(self.null_markers)

    @property
    def analysis_cap(self) -> int:
        if self.cap is not None:
            return self.cap
        return DEFAULT_EDGE_CAP if self.task == "svm" else DEFAULT_FEATURE_CAP

    def echo(self) -> dict:
        out = asdict(self)
        out["null_markers"] = list(self.null_markers)
        out["cap"] = self.analysis_cap
        return out


def parse_imputer(spec: str) -> tuple[str, int]:
    """``"mean"`` or ``"knn:<k>"`` (``"knn"`` alone means k=5)."""
    name, _, arg = spec.partition(":")
    if name == "mean" and not arg:
        return "mean", 0
    if name == "knn":
        try:
            k = int(arg) if arg else 5
        except ValueError:
            raise DataError(f"bad KNN neighbour count in {spec!r}") from None
        if k < 1:
            raise DataError("KNN needs k >= 1")
        return "knn", k
    raise DataError(f"imputer must be mean or knn:<k>, got {spec!r}")


def parse_bounds(spec: str):
    """Turn ``observed``, ``global:lo,hi`` or ``file:<path>`` into an ``infer_bounds`` policy."""
    if spec == "observed":
        return "observed"
    kind, _, arg = spec.partition(":")
    if kind == "global":
        try:
            lo, hi = (float(t) for t in arg.split(","))
        except ValueError:
            raise DataError(f"global bounds need two numbers, got {arg!r}") from None
        return ("global", lo, hi)
    if kind == "file":
        return {k: tuple(v) for k, v in load_bounds_file(arg).items()}
    raise DataError(f"bounds must be observed, global:lo,hi or file:<path>, got {spec!r}")


def resolve_data(data: str, label: str | None) -> tuple[Path, str]:
    if data.startswith("builtin:"):
        name = data.split(":", 1)[1]
        if name not in BUILTIN:
            raise DataError(f"no bundled dataset {name!r}; choose from {sorted(BUILTIN)}")
        return builtin_path(name), label or builtin_label(name)
    if label is None:
        raise DataError("--label is required for a CSV file")
    return Path(data), label


def load(config: ExperimentConfig) -> tuple[IncompleteMatrix, LabelVector]:
    """Load the data, attach bounds, append the intercept column if asked."""
    path, label = resolve_data(config.data, config.label)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    task = "classification" if config.task == "svm" else "regression"
    X, y = load_csv(path, label, config.null_markers, task=task)
    X = infer_bounds(X, parse_bounds(config.bounds))
    if config.intercept:
        X = X.append_constant()
    return X, y


def analyze(X: IncompleteMatrix, y: LabelVector, config: ExperimentConfig) -> MinimalSetReport:
    """Minimal imputation set of ``X`` under ``config``; raises ``CapExceeded`` in exact mode."""
    if config.task == "svm":
        params = SvmParams(C=config.C, tol=config.tol, max_iter=config.max_iter)
        if config.method == "exact":
            return exact_minimal_set_svm(X, y, params, cap=config.analysis_cap)
        report, visited = approx_minimal_set_svm(X, y, params, seed=config.seed)
        probs = miss_probabilities({i: visited[i] for i in report.skipped})
        report.stats["miss_probability"] = {str(i): p for i, p in sorted(probs.items())}
        return report
    if config.method == "exact":
        return exact_minimal_features_lr(X, y, cap=config.analysis_cap, seed=config.seed)
    return approx_minimal_features(X, y, epsilon=config.epsilon, placeholder=config.placeholder)


def split_complete(X: IncompleteMatrix, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded test split of ``round(fraction * n)`` rows, all complete.

    Returns sorted (train, test) row indices. The test split may be empty when
    the data is too small; callers then evaluate in-sample.
    """
    complete = np.array(X.complete_rows, dtype=np.intp)
    n_test = int(round(fraction * X.n))
    if n_test > complete.size:
        raise DataError(f"test split needs {n_test} complete examples, only {complete.size} exist")
    if n_test >= X.n:
        raise DataError("test split would leave no training examples")
    rng = np.random.default_rng(seed)
    rng.shuffle(complete)
    test = np.sort(complete[:n_test])
    train = np.setdiff1d(np.arange(X.n), test)
    return train, test


def _score(task, model, Xs, ys) -> float:
    if task == "svm":
        return 100.0 * float(np.mean(model.predict(Xs) == ys))
    err = Xs @ model.w - ys
    return float(np.mean(err * err))


def _fit(task, values, y, config):
    if task == "svm":
        m = train_svm(values, y, SvmParams(C=config.C, tol=config.tol, max_iter=config.max_iter))
        return m, m.converged
    return train_ols(values, y), True


def run_experiment(config: ExperimentConfig) -> dict:
    """Run both pipelines and return the report as a JSON-ready dict."""
    clock = {}
    t = time.perf_counter()
    X, y = load(config)
    clock["load"] = time.perf_counter() - t

    train, test = split_complete(X, config.test_fraction, config.seed)
    Xt, yt = X.take_rows(train), y.take(train)
    if test.size:
        Xs, ys, evaluation = X.values[test], y.y[test], "held-out"
    else:
        Xs, ys, evaluation = None, yt.y, "in-sample"

    t = time.perf_counter()
    report = analyze(Xt, yt, config)
    clock["analysis"] = time.perf_counter() - t

    method, k = parse_imputer(config.imputer)
    flags = []
    pipelines = {}
    for name, scope in (("full", "all"), ("minimal", report)):
        t = time.perf_counter()
        res = impute(Xt, method, scope, k=k or 5, out_of_scope=config.arbitrary_fill)
        clock[f"impute_{name}"] = time.perf_counter() - t
        t = time.perf_counter()
        model, converged = _fit(config.task, res.values, yt.y, config)
        clock[f"train_{name}"] = time.perf_counter() - t
        if not converged:
            flags.append(f"{name} pipeline training hit max_iter")
        pipelines[name] = {
            "metric": _score(config.task, model, res.values if Xs is None else Xs, ys),
            "imputed_cells": len(res.imputed),
            "arbitrary_cells": len(res.arbitrary),
            "clamped": res.clamped,
            "converged": converged,
        }
    unconv = report.stats.get("unconverged")
    if unconv:
        n_unconv = unconv if isinstance(unconv, int) else len(unconv)
        flags.append(f"{n_unconv} analysis trainings hit max_iter")

    incomplete = Xt.incomplete_rows if report.kind == "examples" else Xt.incomplete_cols
    out = {
        "schema": SCHEMA_VERSION,
        "tool": "minimpute",
        "version": __version__,
        "config": config.echo(),
        "split": {"train": int(train.size), "test": int(test.size), "evaluation": evaluation},
        "analysis": report.to_dict(timings=config.timings),
        "items_imputed": {
            "unit": report.kind,
            "full": len(incomplete),
            "minimal": len(report.members),
            "cells_full": pipelines["full"]["imputed_cells"],
            "cells_minimal": pipelines["minimal"]["imputed_cells"],
        },
        "metric": {
            "name": "accuracy_percent" if config.task == "svm" else "mse",
            "full": pipelines["full"]["metric"],
            "minimal": pipelines["minimal"]["metric"],
        },
        "pipelines": pipelines,
        "flags": flags,
    }
    if config.timings:
        out["timings"] = clock
    return out


def summary_line(run: dict) -> str:
    it, m = run["items_imputed"], run["metric"]
    return (
        f"{run['config']['task']} {run['analysis']['method']}: imputed {it['minimal']} of {it['full']} "
        f"incomplete {it['unit']}; {m['name']} full={m['full']:.6g} minimal={m['minimal']:.6g}"
        + (f" [{'; '.join(run['flags'])}]" if run["flags"] else "")
    )


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
