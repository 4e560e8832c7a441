"""Linear soft-margin SVM without intercept, trained by dual coordinate descent.

Minimizes ``0.5 * ||w||^2 + C * sum(max(0, 1 - y_i * w.x_i))``. There is no
bias term; append a constant feature (``IncompleteMatrix.append_constant``)
to get one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import _kernels
from .dataset import CompleteMatrix, DataError, LabelVector


@dataclass(frozen=True)
class SvmParams:
    C: float = 1.0
    tol: float = 1e-9
    max_iter: int = 100_000
    sv_tol: float = 1e-6

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.sv_tol < 0:
            raise ValueError("sv_tol must be non-negative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True, eq=False)
class SvmModel:
    w: np.ndarray
    duals: np.ndarray
    objective: float
    params: SvmParams
    sweeps: int = 0
    violation: float = 0.0
    converged: bool = True
    extra: dict = field(default_factory=dict)

    def margins(self, X, y) -> np.ndarray:
        X, y = _arrays(X, y)
        return y * (X @ self.w)

    def predict(self, X) -> np.ndarray:
        X = _matrix(X)
        return np.where(X @ self.w >= 0.0, 1.0, -1.0)


def _matrix(X) -> np.ndarray:
    return X.values if isinstance(X, CompleteMatrix) else np.asarray(X, dtype=np.float64)


def _labels(y) -> np.ndarray:
    if isinstance(y, LabelVector):
        if y.task != "classification":
            raise DataError("SVM training needs classification labels")
        return y.y
    return np.asarray(y, dtype=np.float64)


def _arrays(X, y):
    X = _matrix(X)
    y = _labels(y)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DataError(f"shape mismatch: X {X.shape}, y {y.shape}")
    return X, y


def _freeze(a):
    a.setflags(write=False)
    return a


POLISH_EVERY = 16
MAX_POLISH_INTERVAL = 512


def kkt_violation(X, y, alpha, w, C) -> float:
    """Largest projected-gradient magnitude of the dual at ``alpha``."""
    G = y * (X @ w) - 1.0
    pg = np.where(alpha <= 0.0, np.minimum(G, 0.0), np.where(alpha >= C, np.maximum(G, 0.0), G))
    return float(np.abs(pg).max()) if pg.size else 0.0


def _dual(alpha, w) -> float:
    return 0.5 * float(w @ w) - float(alpha.sum())


def _polish(X, y, alpha, w, C, current) -> bool:
    """Solve for the free duals with the bounded ones held fixed.

    Free support vectors sit exactly on the margin, so with ``A`` the rows
    ``y_i x_i`` of the free set and ``b`` the contribution of duals at ``C``,
    the free duals solve ``A A^T a = 1 - A b``. The step is kept only when the
    result stays inside ``[0, C]`` and lowers the KKT violation. Coordinate
    descent crawls on correlated features; this jump lands on the optimum once
    the active set is right.
    """
    free = np.flatnonzero((alpha > 0.0) & (alpha < C))
    if free.size == 0:
        return False
    upper = np.flatnonzero(alpha >= C)
    A = y[free, None] * X[free]
    b = (C * y[upper]) @ X[upper] if upper.size else np.zeros(X.shape[1])
    sol = optimize.lsq_linear(A @ A.T, 1.0 - A @ b, bounds=(0.0, C), method="bvls")
    a_free = np.clip(sol.x, 0.0, C)
    if not np.isfinite(a_free).all():
        return False
    trial = alpha.copy()
    trial[free] = a_free
    w_trial = (trial * y) @ X
    if _dual(trial, w_trial) > _dual(alpha, w) or kkt_violation(X, y, trial, w_trial, C) >= current:
        return False
    alpha[:] = trial
    w[:] = w_trial
    return True


def train_svm(X, y, params: SvmParams | None = None, warm=None) -> SvmModel:
    """Train from scratch, or from ``warm`` dual variables when shapes match.

    Visits examples in index order every sweep, so identical inputs give
    bit-identical models. Stops when the largest projected-gradient violation
    in a sweep is at most ``params.tol``; a model that hits ``max_iter`` is
    returned with ``converged=False``.
    """
    params = params or SvmParams()
    X, y = _arrays(X, y)
    if X.shape[0] < 1:
        raise DataError("need at least one example")
    if not np.isfinite(X).all():
        raise DataError("features must be finite")
    if not np.isin(y, (-1.0, 1.0)).all():
        raise DataError("labels must be -1 or +1")
    X = np.ascontiguousarray(X, dtype=np.float64)
    if warm is not None and np.shape(warm) == (X.shape[0],):
        alpha = np.clip(np.array(warm, dtype=np.float64), 0.0, params.C)
    else:
        alpha = np.zeros(X.shape[0])
    w = (alpha * y) @ X
    sweeps = 0
    chunk = POLISH_EVERY
    while True:
        s, violation = _kernels.dcd(X, y, alpha, w, params.C, params.tol, min(chunk, params.max_iter - sweeps))
        sweeps += s
        if violation <= params.tol or sweeps >= params.max_iter:
            break
        _polish(X, y, alpha, w, params.C, violation)
        chunk = min(2 * chunk, MAX_POLISH_INTERVAL)
    return SvmModel(
        w=_freeze(w),
        duals=_freeze(alpha),
        objective=_kernels.hinge_objective(X, y, w, params.C),
        params=params,
        sweeps=int(sweeps),
        violation=float(violation),
        converged=bool(violation <= params.tol),
    )


def support_vectors(model: SvmModel, X, y) -> frozenset[int]:
    """Rows with ``y_i * w.x_i <= 1 + sv_tol``."""
    X, y = _arrays(X, y)
    if X.shape[1] != model.w.shape[0]:
        raise DataError(f"model has {model.w.shape[0]} weights, X has {X.shape[1]} columns")
    m = y * (X @ model.w)
    return frozenset(int(i) for i in np.flatnonzero(m <= 1.0 + model.params.sv_tol))


def warm_update(model: SvmModel, X, change, y) -> tuple[SvmModel, np.ndarray]:
    """Retrain after changing one cell, warm-started from ``model``'s duals.

    ``X`` is the matrix the model was trained on and ``change`` is either a
    ``(CellRef, new_value)`` pair or the full new matrix, which must differ
    from ``X`` in at most one cell. Returns the new model and the modified
    matrix; when nothing changes the input model is returned untouched.
    """
    X, y = _arrays(X, y)
    if isinstance(change, tuple) and len(change) == 2 and np.ndim(change[1]) == 0:
        (r, c), value = change
    else:
        new = _matrix(change)
        if new.shape != X.shape:
            raise DataError(f"new matrix shape {new.shape} differs from {X.shape}")
        diff = np.argwhere(new != X)
        if len(diff) > 1:
            raise DataError(f"warm_update takes one changed cell, got {len(diff)}")
        if len(diff) == 0:
            return model, X
        r, c = map(int, diff[0])
        value = new[r, c]
    if X[r, c] == value:
        return model, X
    X2 = np.array(X)
    X2[r, c] = value
    return train_svm(X2, y, model.params, warm=model.duals), X2


def objective(X, y, w, C) -> float:
    X, y = _arrays(X, y)
    return _kernels.hinge_objective(X, y, np.asarray(w, dtype=np.float64), C)
