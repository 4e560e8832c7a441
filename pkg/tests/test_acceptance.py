"""End-to-end acceptance checks, one test per criterion.

Each test records a short detail string; the conftest hook prints one
PASS/FAIL line per criterion at the end of the run.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from minimpute import (
    SvmParams,
    add_feature_incremental,
    approx_minimal_set_svm,
    certain_model_check_lr,
    enumerate_edge_assignments,
    exact_minimal_features_lr,
    exact_minimal_set_svm,
    miss_probability,
    mutual_incoherence_and_bound,
    train_ols,
    train_svm,
    warm_update,
)
from minimpute.bench import ExperimentConfig, run_experiment
from minimpute.dataset import CellRef, edge_matrix
from minimpute.svm_minimal import VisitedEdges

from instances import random_certain_lr_instance, random_repair, random_svm_instance, two_sets_fixture

N_SVM = 200


@pytest.fixture(scope="module")
def svm_runs():
    rng = np.random.default_rng(20240601)
    runs = []
    t0 = time.perf_counter()
    for k in range(N_SVM):
        X, y, C = random_svm_instance(rng)
        p = SvmParams(C=C)
        exact = exact_minimal_set_svm(X, y, p)
        approx, _ = approx_minimal_set_svm(X, y, p, seed=k)
        runs.append((X, y, p, exact, approx))
    return runs, time.perf_counter() - t0


@pytest.mark.criterion(1, "approx SVM members never outside exact members")
def test_criterion_1_no_false_positive(svm_runs, record_property):
    runs, seconds = svm_runs
    bad = [k for k, (*_, exact, approx) in enumerate(runs) if not set(approx.members) <= set(exact.members)]
    smaller = sum(len(e.members) < len(X.incomplete_rows) for X, _, _, e, _ in runs)
    record_property("detail", f"{len(runs) - len(bad)}/{len(runs)} contained, {seconds:.1f}s, "
                              f"{smaller} instances with a proper minimal set")
    assert len(runs) >= 200
    assert not bad
    assert seconds < 300


@pytest.mark.criterion(2, "imputing exact members leaves a certain SVM model")
def test_criterion_2_certainty(svm_runs, record_property):
    runs, _ = svm_runs
    failures, worst, checked = [], 0.0, 0
    for k, (X, y, p, exact, _) in enumerate(runs):
        for f in range(5):
            rng = np.random.default_rng([k, f])
            fill = {c: rng.uniform(X.lo[c], X.hi[c]) for c in X.missing_cells if c.row in exact.members}
            R = X.fill(fill)
            if exact_minimal_set_svm(R, y, p).members:
                failures.append((k, f, "members"))
            ws = [train_svm(edge_matrix(R, a), y, p).w for a in enumerate_edge_assignments(R)]
            spread = max(float(np.abs(w - ws[0]).max()) for w in ws)
            worst = max(worst, spread)
            if spread > 10 * p.tol:
                failures.append((k, f, spread))
            checked += 1
    record_property("detail", f"{checked} residual datasets, worst w spread {worst:.1e}, {len(failures)} failures")
    assert not failures


@pytest.mark.criterion(3, "exact SVM members invariant to example order")
def test_criterion_3_uniqueness(record_property):
    rng = np.random.default_rng(3)
    mismatches = 0
    for _ in range(50):
        X, y, C = random_svm_instance(rng)
        p = SvmParams(C=C)
        base = exact_minimal_set_svm(X, y, p).members
        for _ in range(10):
            perm = rng.permutation(X.n)
            Xp = X.take_rows(perm)
            got = exact_minimal_set_svm(Xp, y.take(perm), p).members
            mismatches += sorted(int(perm[i]) for i in got) != base
    record_property("detail", f"50 instances x 10 permutations, {mismatches} mismatches")
    assert mismatches == 0


@pytest.mark.criterion(4, "LR fixture has two minimal sets {z2} and {z3}")
def test_criterion_4_multiple_minimal_sets(record_property):
    X, y = two_sets_fixture()
    rep = exact_minimal_features_lr(X, y)
    record_property("detail", f"size {len(rep.members)}, passing sets {rep.alternatives}")
    assert len(rep.members) == 1
    assert sorted(rep.alternatives) == [[1], [2]]


@pytest.mark.criterion(5, "certain-model checker has no counterexample")
def test_criterion_5_checker_soundness(record_property):
    rng = np.random.default_rng(5)
    tol = 1e-8
    accepted = counterexamples = 0
    worst = 0.0
    while accepted < 100:
        X, y = random_certain_lr_instance(rng)
        v = certain_model_check_lr(X, y, tol)
        if not v.exists:
            continue
        accepted += 1
        coefs = np.array([train_ols(random_repair(X, rng), y).w for _ in range(50)])
        scale = max(1.0, float(np.abs(v.coef()).max()))
        spread = float(np.abs(coefs - coefs[0]).max()) / scale
        dev = float(np.abs(coefs - v.coef()).max()) / scale
        worst = max(worst, spread, dev)
        counterexamples += spread > 10 * tol or dev > 10 * tol
    record_property("detail", f"{accepted} accepted instances x 50 repairs, worst relative spread {worst:.1e}")
    assert counterexamples == 0


@pytest.mark.criterion(6, "incremental OLS and warm SVM match cold training")
def test_criterion_6_incremental_fidelity(record_property):
    rng = np.random.default_rng(6)
    worst_lr = 0.0
    for _ in range(20):
        A = rng.normal(size=(50, 10))
        y = rng.normal(size=50)
        m = train_ols(A[:, :1], y)
        for k in range(2, 11):
            m = add_feature_incremental(m, A[:, k - 1], y)
            cold = train_ols(A[:, :k], y)
            worst_lr = max(worst_lr, float(np.linalg.norm(m.w - cold.w) / np.linalg.norm(cold.w)))
    tol = 1e-9
    worst_svm, trials = 0.0, 0
    while trials < 120:
        X, y, C = random_svm_instance(rng)
        p = SvmParams(C=C, tol=tol)
        Xr = edge_matrix(X, next(iter(enumerate_edge_assignments(X))))
        model = train_svm(Xr, y, p)
        for _ in range(4):
            cell = CellRef(int(rng.integers(X.n)), int(rng.integers(X.d)))
            warm, X2 = warm_update(model, Xr, (cell, float(rng.normal())), y)
            worst_svm = max(worst_svm, abs(warm.objective - train_svm(X2, y, p).objective))
            trials += 1
    record_property("detail", f"OLS worst relative error {worst_lr:.1e}; "
                              f"SVM worst objective gap {worst_svm:.1e} over {trials} perturbations")
    assert worst_lr <= 1e-8
    assert worst_svm <= 10 * tol


def _visited(ranges):
    cells = [CellRef(0, j) for j in range(len(ranges))]
    return VisitedEdges({c: r for c, r in zip(cells, ranges)}, {c: (-1.0, 1.0) for c in cells},
                        np.empty((0, len(cells))))


@pytest.mark.criterion(7, "miss-probability analytic fixtures")
def test_criterion_7_miss_probability(record_property):
    full = miss_probability(_visited([(-1.0, 1.0), (-1.0, 1.0)]))
    single = miss_probability(_visited([(-1.0,)]))
    half = miss_probability(_visited([(-1.0, 0.0), (-1.0, 1.0)]))
    record_property("detail", f"full={full}, singleton={single}, box={half}")
    assert full == 1.0
    assert single == 0.0
    assert abs(half - 0.5) <= 1e-12


@pytest.mark.criterion(8, "mutual incoherence diagnostic fixtures")
def test_criterion_8_incoherence(record_property):
    n = 32
    Q, _ = np.linalg.qr(np.random.default_rng(8).normal(size=(n, 5)))
    sigma = [0.05, 0.1, 0.2]
    b = mutual_incoherence_and_bound(Q, k=3, sigma=sigma, incomplete=[0, 4])
    expected = 2 * sum(sigma) * math.sqrt(n + 2 * math.sqrt(n * math.log(n)))
    err = max(abs(t - expected) for t in b.thresholds.values())
    z = np.ones(4) / 2
    violated = [not mutual_incoherence_and_bound(np.column_stack([z, z]), k=k, sigma=[1.0]).condition_holds
                for k in range(1, 11)]
    record_property("detail", f"mu={b.mu:.1e}, threshold error {err:.1e}, identical columns violated for k=1..10: {all(violated)}")
    assert abs(b.mu) <= 1e-9 and err <= 1e-9
    assert all(violated)


@pytest.mark.criterion(9, "Breast Cancer: fewer imputations, accuracy parity")
def test_criterion_9_breast_cancer(record_property):
    t0 = time.perf_counter()
    parts, ok = [], True
    for imputer in ("mean", "knn:5"):
        run = run_experiment(ExperimentConfig(C=1.0, intercept=True, method="approx", imputer=imputer))
        it, m = run["items_imputed"], run["metric"]
        gap = abs(m["minimal"] - m["full"])
        ok &= it["minimal"] < it["full"] and gap <= 1.0
        parts.append(f"{imputer}: {it['minimal']}/{it['full']} examples, acc {m['full']:.2f} vs {m['minimal']:.2f}")
    seconds = time.perf_counter() - t0
    record_property("detail", "; ".join(parts) + f"; {seconds:.0f}s")
    assert ok
    assert seconds < 120


@pytest.mark.criterion(10, "CLI reports are byte-identical across invocations")
def test_criterion_10_determinism(tmp_path, record_property):
    svm = tmp_path / "svm.csv"
    svm.write_text("x1,x2,y\n2,0,1\n-2,0,-1\n10,null,1\nnull,0,1\n1,1,1\n-1,-2,-1\n")
    lr = tmp_path / "lr.csv"
    lr.write_text("z1,z2,z3,y\n1,0,0,1\n0,null,null,1\n")
    svm_args = ["--data", str(svm), "--label", "y", "--bounds", "global:-1,1", "--seed", "7", "--test-fraction", "0.1"]
    lr_args = ["--task", "linreg", "--data", str(lr), "--label", "y", "--bounds", "global:-1,1", "--test-fraction", "0.1"]
    commands = [
        ["analyze", *svm_args, "--method", "exact"],
        ["analyze", *svm_args, "--method", "approx"],
        ["impute", *svm_args, "--imputer", "knn:1"],
        ["bench", *svm_args, "--method", "exact", "--imputer", "mean"],
        ["analyze", *lr_args, "--method", "exact"],
        ["bench", *lr_args, "--method", "approx"],
        ["bench", "--intercept", "--seed", "3"],
    ]
    differing = []
    for k, cmd in enumerate(commands):
        outs = []
        for rep in range(2):
            path = tmp_path / f"out{k}_{rep}"
            res = subprocess.run([sys.executable, "-m", "minimpute.cli", *cmd, "--out", str(path)],
                                 capture_output=True, text=True)
            assert res.returncode == 0, res.stderr
            outs.append(path.read_bytes())
        if outs[0] != outs[1]:
            differing.append(cmd[0])
    record_property("detail", f"{len(commands)} commands run twice, {len(differing)} differ")
    assert not differing
