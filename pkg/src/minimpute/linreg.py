"""Ordinary least squares with cheap column additions.

Residuals follow the convention ``residual = X_active @ w - y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .dataset import CompleteMatrix, DataError, LabelVector


@dataclass(frozen=True, eq=False)
class LinModel:
    """OLS fit over a set of active columns.

    ``design`` keeps the active columns (n x k) so later columns can be added
    without the caller passing the matrix back in. ``gram_inverse`` is the
    inverse of ``design.T @ design`` when that matrix is invertible.
    """

    active: tuple
    w: np.ndarray
    residual: np.ndarray
    design: np.ndarray
    gram_inverse: np.ndarray | None = None
    fallback: bool = False

    def coef(self, d: int, columns: Sequence[int] | None = None) -> np.ndarray:
        """Coefficients spread over ``d`` features, zeros on inactive ones.

        ``columns`` maps active positions to feature indices; by default the
        ``active`` labels are used as indices.
        """
        out = np.zeros(d)
        idx = list(self.active) if columns is None else list(columns)
        out[idx] = self.w
        return out

    def predict(self, X_active) -> np.ndarray:
        return np.asarray(X_active, dtype=np.float64) @ self.w


def _y(y) -> np.ndarray:
    return y.y if isinstance(y, LabelVector) else np.asarray(y, dtype=np.float64)


def _cols(X) -> np.ndarray:
    A = X.values if isinstance(X, CompleteMatrix) else np.asarray(X, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    return A


def _ro(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def train_ols(X, y, active: Sequence | None = None) -> LinModel:
    """Least squares on the columns of ``X`` (minimum-norm when rank deficient).

    ``active`` labels the columns (defaults to ``0..k-1``).
    """
    yv = _y(y)
    A = _cols(X)
    n, k = A.shape
    if n < 1:
        raise DataError("need at least one example")
    if yv.shape != (n,):
        raise DataError(f"shape mismatch: X {A.shape}, y {yv.shape}")
    if not np.isfinite(A).all():
        raise DataError("selected columns must be finite")
    active = tuple(range(k)) if active is None else tuple(active)
    if len(active) != k:
        raise DataError("one label per column expected")
    if k == 0:
        return LinModel(active, _ro(np.zeros(0)), _ro(-yv), _ro(A), _ro(np.zeros((0, 0))))
    w, *_ = np.linalg.lstsq(A, yv, rcond=None)
    gram = A.T @ A
    inv = None
    if np.linalg.matrix_rank(A) == k:
        inv = np.linalg.inv(gram)
    return LinModel(active, _ro(w), _ro(A @ w - yv), _ro(A), None if inv is None else _ro(inv))


def add_feature_incremental(model: LinModel, z, y, label=None, rtol: float = 1e-10) -> LinModel:
    """Extend the fit with one more column using a bordered-inverse update.

    With ``G^-1`` cached for the active columns, ``b = X^T z``, ``u = G^-1 b``
    and Schur complement ``s = z.z - b.u``, the new coefficient is
    ``g = -z.r / s`` and the old ones shift by ``-g u``; the residual moves by
    ``g (z - X u)``. Cost is O(n k + k^2). When ``s`` is (numerically) zero,
    i.e. ``z`` lies in the span of the active columns, the model is refit from
    scratch with the minimum-norm solution and flagged ``fallback``.
    """
    yv = _y(y)
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    n = model.design.shape[0]
    if z.shape != (n,):
        raise DataError(f"new column has length {z.shape[0]}, expected {n}")
    label = len(model.active) if label is None else label
    active = model.active + (label,)
    design = np.column_stack([model.design, z]) if model.design.size else z[:, None]
    zz = float(z @ z)
    if model.gram_inverse is None:
        out = train_ols(design, yv, active)
        return LinModel(out.active, out.w, out.residual, out.design, out.gram_inverse, True)
    b = model.design.T @ z
    u = model.gram_inverse @ b
    s = zz - float(b @ u)
    if zz == 0.0 or s <= rtol * zz:
        out = train_ols(design, yv, active)
        return LinModel(out.active, out.w, out.residual, out.design, out.gram_inverse, True)
    g = -float(z @ model.residual) / s
    w = np.append(model.w - g * u, g)
    residual = model.residual + g * (z - model.design @ u)
    k = len(model.active)
    inv = np.empty((k + 1, k + 1))
    inv[:k, :k] = model.gram_inverse + np.outer(u, u) / s
    inv[:k, k] = -u / s
    inv[k, :k] = -u / s
    inv[k, k] = 1.0 / s
    return LinModel(active, _ro(w), _ro(residual), _ro(design), _ro(inv), False)


class IncoherenceBound(NamedTuple):
    mu: float
    thresholds: dict
    condition_holds: bool


def mutual_incoherence(X) -> float:
    """Largest |cosine| between two distinct columns."""
    A = _cols(X)
    norms = np.linalg.norm(A, axis=0)
    if (norms == 0).any():
        raise DataError(f"zero-norm column at index {int(np.flatnonzero(norms == 0)[0])}")
    if A.shape[1] < 2:
        return 0.0
    U = A / norms
    G = np.abs(U.T @ U)
    np.fill_diagonal(G, 0.0)
    return float(G.max())


def mutual_incoherence_and_bound(
    X,
    k: int,
    sigma: Mapping | Sequence[float],
    incomplete: Sequence[int] = (),
    n: int | None = None,
) -> IncoherenceBound:
    """Incoherence of the (unit-normalized) columns and the coefficient floor.

    The floor is ``2 * sum(sigma) * sqrt(n + 2 sqrt(n ln n)) / (1 - (2k - 1) mu)``
    with the sum running over every missing cell's standard deviation; it is
    reported for each feature in ``incomplete``. When ``mu >= 1 / (2k - 1)`` the
    condition fails and the floors are infinite.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    A = _cols(X)
    n = A.shape[0] if n is None else int(n)
    sig = np.asarray(list(sigma.values()) if isinstance(sigma, Mapping) else list(sigma), dtype=np.float64)
    if (sig < 0).any():
        raise ValueError("standard deviations must be non-negative")
    mu = mutual_incoherence(A)
    denom = 1.0 - (2 * k - 1) * mu
    holds = denom > 0.0
    if holds:
        root = math.sqrt(n + 2.0 * math.sqrt(n * math.log(n))) if n > 1 else math.sqrt(n)
        floor = 2.0 * float(sig.sum()) * root / denom
    else:
        floor = math.inf
    return IncoherenceBound(mu, {int(j): floor for j in incomplete}, bool(holds))
