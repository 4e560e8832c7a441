"""Feature-wise minimal imputation for linear regression.

A certain model for least squares puts zero weight on every incomplete
feature. Fitting the complete features gives a residual ``r``; the zero-weight
model stays optimal under every repair exactly when each incomplete column is
orthogonal to ``r`` on its observed rows and ``r`` vanishes on its missing
rows. ``certain_model_check_lr`` tests those two conditions,
``approx_minimal_features`` runs a greedy OMP-style selection seeded with all
complete features, and ``exact_minimal_features_lr`` searches subsets in
increasing size.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import DEFAULT_EDGE_CAP, CapExceeded, DataError, IncompleteMatrix, LabelVector
from .linreg import LinModel, add_feature_incremental, train_ols
from .report import MinimalSetReport

DEFAULT_FEATURE_CAP = 12


@dataclass
class CertainModelVerdict:
    exists: bool
    model: LinModel | None
    violations: list[dict] = field(default_factory=list)
    complete_features: list[int] = field(default_factory=list)
    d: int = 0

    def coef(self) -> np.ndarray | None:
        """Certain model over all ``d`` features (zeros on incomplete ones)."""
        if self.model is None:
            return None
        return self.model.coef(self.d, self.complete_features)

    def to_dict(self) -> dict:
        coef = self.coef()
        return {
            "exists": self.exists,
            "coef": None if coef is None else [float(v) for v in coef],
            "violations": self.violations,
        }


def _y(y) -> np.ndarray:
    return y.y if isinstance(y, LabelVector) else np.asarray(y, dtype=np.float64)


def fold_degenerate(X: IncompleteMatrix) -> IncompleteMatrix:
    """Treat missing cells with lo == hi as observed at that value."""
    cells = {c: float(X.lo[c]) for c in X.degenerate_cells}
    return X.fill(cells) if cells else X


def certain_model_check_lr(X: IncompleteMatrix, y, tol: float = 1e-8) -> CertainModelVerdict:
    """Decide whether one least-squares model is optimal for every repair.

    Tolerances are relative to ``||y||``: the observed-part inner product is
    compared with ``tol * ||z_obs|| * ||y||`` and residuals on missing rows with
    ``tol * ||y||``.
    """
    X = fold_degenerate(X)
    yv = _y(y)
    miss = X.missing_mask
    incomplete = X.incomplete_cols
    complete = [j for j in range(X.d) if j not in set(incomplete)]
    model = train_ols(X.values[:, complete], yv, active=complete)
    r = model.residual
    scale = float(np.linalg.norm(yv))
    violations = []
    for j in incomplete:
        obs = ~miss[:, j]
        z_obs = X.values[obs, j]
        dot = float(z_obs @ r[obs])
        if abs(dot) > tol * float(np.linalg.norm(z_obs)) * scale:
            violations.append(
                {"feature": j, "kind": "observed-part nonorthogonal", "magnitude": abs(dot)}
            )
        r_miss = np.abs(r[~obs])
        if r_miss.size and r_miss.max() > tol * scale:
            violations.append(
                {"feature": j, "kind": "nonzero residual at missing row", "magnitude": float(r_miss.max())}
            )
    exists = not violations
    return CertainModelVerdict(exists, model if exists else None, violations, complete, X.d)


def masked_cosine(z: np.ndarray, r: np.ndarray) -> float:
    """|cos(z, r)| over the rows where ``z`` is observed."""
    obs = ~np.isnan(z)
    a, b = z[obs], r[obs]
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(abs(a @ b) / (na * nb))


def relevance(z: np.ndarray, r: np.ndarray, floor: float = 0.0) -> float:
    """Largest |cos(z, r)| reachable by filling ``z``'s missing entries.

    Filling the missing rows freely, the maximum is
    ``sqrt(c^2 / ||z_obs||^2 + ||r_miss||^2) / ||r||`` with ``c = z_obs . r_obs``
    (Cauchy-Schwarz on the stacked vector). It equals the ordinary |cos| for a
    complete column and is zero exactly when ``z`` is orthogonal to ``r`` on its
    observed rows and ``r`` vanishes on its missing rows. A residual with norm
    at most ``floor`` counts as zero.
    """
    rn = float(np.linalg.norm(r))
    if rn <= floor:
        return 0.0
    obs = ~np.isnan(z)
    z_obs = z[obs]
    q = float(z_obs @ z_obs)
    c = float(z_obs @ r[obs])
    r_miss = r[~obs]
    part = c * c / q if q > 0 else 0.0
    return min(1.0, math.sqrt(part + float(r_miss @ r_miss)) / rn)


def _placeholder_column(X: IncompleteMatrix, j: int, placeholder: str) -> np.ndarray:
    col = np.array(X.values[:, j])
    miss = np.isnan(col)
    if placeholder == "mean":
        obs = col[~miss]
        if obs.size == 0:
            if not X.has_bounds:
                raise DataError(f"feature {X.feature_names[j]!r} has no observed values")
            col[miss] = 0.5 * (X.lo[miss, j] + X.hi[miss, j])
            return col
        fill = np.full(miss.sum(), obs.mean())
        if X.has_bounds:
            fill = np.clip(fill, X.lo[miss, j], X.hi[miss, j])
        col[miss] = fill
    elif placeholder == "midpoint":
        X.require_bounds()
        col[miss] = 0.5 * (X.lo[miss, j] + X.hi[miss, j])
    else:
        raise ValueError(f"unknown placeholder {placeholder!r}")
    return col


def _aligned_column(X: IncompleteMatrix, j: int, r: np.ndarray, base: np.ndarray) -> np.ndarray:
    """Endpoint fill that maximizes |z . r|, keeping ``base`` where r is zero."""
    col = np.array(base)
    miss = np.isnan(X.values[:, j])
    obs = ~miss
    c = float(X.values[obs, j] @ r[obs])
    s = 1.0 if c >= 0 else -1.0
    tiny = 1e-12 * max(float(np.abs(r).max()), 1e-300)
    rows = np.flatnonzero(miss & (np.abs(r) > tiny))
    col[rows] = np.where(s * r[rows] > 0, X.hi[rows, j], X.lo[rows, j])
    return col


def approx_minimal_features(
    X: IncompleteMatrix,
    y,
    epsilon: float = 0.1,
    placeholder: str = "mean",
    tol: float = 1e-8,
) -> MinimalSetReport:
    """Greedy selection of incomplete features to impute.

    Starts from a least-squares fit on every complete feature. While some
    remaining incomplete feature has ``relevance`` above ``epsilon`` against the
    current residual, the most relevant one (lowest index on ties) joins the
    set, is materialized with a placeholder and added to the fit incrementally.

    The placeholder is the feature's observed mean (``"mean"``) or the interval
    midpoint (``"midpoint"``). When that column adds nothing to the fit (it lies
    in the span of the active columns), the missing entries are instead set to
    the interval endpoints best aligned with the residual, since an
    uninformative placeholder would leave the residual untouched and drag in
    further features.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must be in (0, 1]")
    t0 = time.perf_counter()
    X = fold_degenerate(X)
    yv = _y(y)
    incomplete = X.incomplete_cols
    if placeholder == "mean":
        for j in incomplete:
            if np.isnan(X.values[:, j]).all():
                raise DataError(f"feature {X.feature_names[j]!r} has no observed values for the mean placeholder")
    complete = [j for j in range(X.d) if j not in set(incomplete)]
    model = train_ols(X.values[:, complete], yv, active=complete)
    remaining = list(incomplete)
    floor = tol * float(np.linalg.norm(yv))
    evidence = {}
    fills: dict[int, np.ndarray] = {}
    norms = [float(np.linalg.norm(model.residual))]
    history = []
    while remaining:
        scores = [relevance(X.values[:, j], model.residual, floor) for j in remaining]
        best = int(np.argmax(scores))
        history.append(float(scores[best]))
        if scores[best] <= epsilon:
            break
        j = remaining.pop(best)
        col = _placeholder_column(X, j, placeholder)
        how = placeholder
        nxt = add_feature_incremental(model, col, yv, label=j)
        if nxt.fallback and X.has_bounds:
            alt = _aligned_column(X, j, model.residual, col)
            cand = add_feature_incremental(model, alt, yv, label=j)
            if not cand.fallback or np.linalg.norm(cand.residual) < np.linalg.norm(nxt.residual):
                col, nxt, how = alt, cand, "aligned"
        model = nxt
        fills[j] = col
        evidence[j] = {
            "selection_order": len(evidence),
            "cosine_at_selection": float(scores[best]),
            "fill": how,
        }
        norms.append(float(np.linalg.norm(model.residual)))

    members = sorted(evidence)
    residual_X = X
    if members:
        miss = X.missing_mask
        residual_X = X.fill({(int(r), j): float(fills[j][r]) for j in members for r in np.flatnonzero(miss[:, j])})
    verdict = certain_model_check_lr(residual_X, yv, tol)
    return MinimalSetReport(
        kind="features",
        method="approx",
        members=members,
        skipped=[j for j in incomplete if j not in evidence],
        evidence=evidence,
        stats={
            "epsilon": epsilon,
            "placeholder": placeholder,
            "max_relevance_history": history,
            "residual_norms": norms,
            "incomplete_features": len(incomplete),
            "seconds": time.perf_counter() - t0,
        },
        verdict=verdict.to_dict(),
    )


def _fills_for(X: IncompleteMatrix, cells, samples: int, rng, edge_cap: int):
    lo = np.array([X.lo[c] for c in cells])
    hi = np.array([X.hi[c] for c in cells])
    if len(cells) <= edge_cap:
        for bits in itertools.product((False, True), repeat=len(cells)):
            yield np.where(bits, hi, lo)
    else:
        yield lo
        yield hi
    for _ in range(samples):
        yield rng.uniform(lo, hi)


def subset_passes(
    X: IncompleteMatrix, y, subset, samples: int = 8, tol: float = 1e-8, seed=0, edge_cap: int = 10
) -> bool:
    """Does imputing ``subset`` (any values) leave a certain model?

    Checked on every edge fill of the subset's cells (or just all-lo and all-hi
    beyond ``edge_cap`` cells) plus ``samples`` uniform random fills. A failure
    is conclusive; a pass is as strong as the fills tried.
    """
    subset = set(subset)
    cells = [c for c in X.missing_cells if c.col in subset]
    rng = np.random.default_rng([int(seed), *sorted(subset)])
    for vals in _fills_for(X, cells, samples, rng, edge_cap):
        Xf = X.fill(dict(zip(cells, map(float, vals)))) if cells else X
        if not certain_model_check_lr(Xf, y, tol).exists:
            return False
    return True


def exact_minimal_features_lr(
    X: IncompleteMatrix,
    y,
    cap: int = DEFAULT_FEATURE_CAP,
    samples: int = 8,
    tol: float = 1e-8,
    seed=0,
    edge_cap: int = 10,
) -> MinimalSetReport:
    """Smallest sets of incomplete features whose imputation leaves a certain model.

    Candidate subsets are tried by increasing size, lexicographically within a
    size; every passing subset of the first successful size is kept
    (``alternatives``), and the lexicographically first becomes ``members``.
    """
    t0 = time.perf_counter()
    X = fold_degenerate(X)
    X.require_bounds()
    yv = _y(y)
    F = X.incomplete_cols
    if len(F) > cap:
        raise CapExceeded(len(F), cap, "incomplete features")
    tested = 0
    passing: list[tuple[int, ...]] = []
    for size in range(len(F) + 1):
        for S in itertools.combinations(F, size):
            tested += 1
            if subset_passes(X, yv, S, samples, tol, seed, edge_cap):
                passing.append(S)
        if passing:
            break
    members = list(passing[0]) if passing else list(F)
    return MinimalSetReport(
        kind="features",
        method="exact",
        members=members,
        skipped=[j for j in F if j not in members],
        evidence={j: {"minimal_size": len(members), "in_sets": sum(j in S for S in passing)} for j in members},
        stats={
            "candidates_tested": tested,
            "samples": samples,
            "incomplete_features": len(F),
            "seconds": time.perf_counter() - t0,
        },
        alternatives=[list(S) for S in passing],
    )


__all__ = [
    "CertainModelVerdict",
    "certain_model_check_lr",
    "masked_cosine",
    "relevance",
    "approx_minimal_features",
    "exact_minimal_features_lr",
    "subset_passes",
    "fold_degenerate",
    "DEFAULT_EDGE_CAP",
]
