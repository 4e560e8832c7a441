"""Mean and KNN imputation, over all missing cells or a minimal set.

Cells outside the requested scope still need some value before a model can be
trained; they get an arbitrary in-bounds value (the interval midpoint by
default) and are listed in ``ImputeResult.arbitrary``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import CellRef, CompleteMatrix, DataError, IncompleteMatrix
from .report import MinimalSetReport


@dataclass
class ImputeResult:
    matrix: CompleteMatrix
    imputed: list[CellRef] = field(default_factory=list)
    arbitrary: list[CellRef] = field(default_factory=list)
    clamped: int = 0

    @property
    def values(self) -> np.ndarray:
        return self.matrix.values


def scope_mask(X: IncompleteMatrix, scope) -> np.ndarray:
    """Boolean n x d mask of the missing cells that are in scope."""
    miss = X.missing_mask
    if scope is None or scope == "all":
        return miss
    if not isinstance(scope, MinimalSetReport):
        raise TypeError(f"scope must be 'all' or a MinimalSetReport, got {type(scope).__name__}")
    sel = np.zeros_like(miss)
    if scope.kind == "examples":
        sel[scope.members, :] = True
    else:
        sel[:, scope.members] = True
    return miss & sel


def _fill_out_of_scope(X: IncompleteMatrix, out: np.ndarray, mask: np.ndarray, how) -> list[CellRef]:
    cells = [CellRef(int(r), int(c)) for r, c in np.argwhere(mask)]
    if not cells:
        return cells
    X.require_bounds()
    lo, hi = X.lo[mask], X.hi[mask]
    if how == "midpoint":
        out[mask] = 0.5 * (lo + hi)
    elif how == "lo":
        out[mask] = lo
    elif how == "hi":
        out[mask] = hi
    elif isinstance(how, np.random.Generator):
        out[mask] = how.uniform(lo, hi)
    else:
        raise ValueError(f"unknown out-of-scope fill {how!r}")
    return cells


def _clamp(X: IncompleteMatrix, out: np.ndarray, mask: np.ndarray) -> int:
    lo, hi = X.lo[mask], X.hi[mask]
    vals = out[mask]
    has = ~np.isnan(lo)
    clipped = vals.copy()
    clipped[has] = np.clip(vals[has], lo[has], hi[has])
    out[mask] = clipped
    return int(np.count_nonzero(clipped != vals))


def mean_impute(X: IncompleteMatrix, scope="all", out_of_scope="midpoint") -> ImputeResult:
    """Fill in-scope cells with their feature's observed mean, clamped to bounds."""
    mask = scope_mask(X, scope)
    out = np.array(X.values)
    for j in np.flatnonzero(mask.any(axis=0)):
        obs = X.values[:, j][~np.isnan(X.values[:, j])]
        if obs.size == 0:
            raise DataError(f"feature {X.feature_names[j]!r} has no observed values to average")
        out[mask[:, j], j] = obs.mean()
    clamped = _clamp(X, out, mask)
    rest = X.missing_mask & ~mask
    arbitrary = _fill_out_of_scope(X, out, rest, out_of_scope)
    imputed = [CellRef(int(r), int(c)) for r, c in np.argwhere(mask)]
    return ImputeResult(CompleteMatrix(out, X.feature_names), imputed, arbitrary, clamped)


def knn_impute(X: IncompleteMatrix, scope="all", k: int = 5, out_of_scope="midpoint") -> ImputeResult:
    """Fill in-scope cells with the average over the ``k`` nearest complete rows.

    Distance is Euclidean over the features the incomplete row observes; ties
    go to the lower row index.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    mask = scope_mask(X, scope)
    complete = np.array(X.complete_rows, dtype=np.intp)
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size and complete.size < k:
        raise DataError(f"KNN needs at least k={k} complete rows, found {complete.size}")
    out = np.array(X.values)
    ref = X.values[complete]
    for i in rows:
        obs = ~np.isnan(X.values[i])
        diff = ref[:, obs] - X.values[i, obs]
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        nearest = np.argsort(dist, kind="stable")[:k]
        cols = np.flatnonzero(mask[i])
        out[i, cols] = ref[nearest][:, cols].mean(axis=0)
    clamped = _clamp(X, out, mask)
    rest = X.missing_mask & ~mask
    arbitrary = _fill_out_of_scope(X, out, rest, out_of_scope)
    imputed = [CellRef(int(r), int(c)) for r, c in np.argwhere(mask)]
    return ImputeResult(CompleteMatrix(out, X.feature_names), imputed, arbitrary, clamped)


def impute(X: IncompleteMatrix, method: str = "mean", scope="all", k: int = 5, out_of_scope="midpoint") -> ImputeResult:
    if method == "mean":
        return mean_impute(X, scope, out_of_scope)
    if method == "knn":
        return knn_impute(X, scope, k, out_of_scope)
    raise ValueError(f"unknown imputer {method!r}")
