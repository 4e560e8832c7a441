"""Hot loops for the linear SVM solver.

Each kernel exists twice: a numba ``@njit`` version and a pure-numpy version.
The numba path is used when numba imports cleanly and the environment variable
``MINIMPUTE_DISABLE_NUMBA`` is unset (or ``0``/``false``). Both paths follow
the same visitation order and update rule, so they agree to rounding error.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

_FLAG = os.environ.get("MINIMPUTE_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG not in ("", "0", "false", "no")
HAVE_NUMBA = numba is not None
BACKEND = "numba" if HAVE_NUMBA and not NUMBA_DISABLED else "numpy"

__all__ = ["BACKEND", "HAVE_NUMBA", "dcd_numpy", "dcd_numba", "dcd", "hinge_objective"]


def dcd_numpy(X, y, alpha, w, C, tol, max_iter):
    """Cyclic dual coordinate descent for the L1-hinge SVM without bias.

    ``alpha`` and ``w`` are updated in place. Returns ``(sweeps, violation)``
    where ``violation`` is the largest projected-gradient magnitude seen in the
    last sweep.
    """
    n = X.shape[0]
    sq = np.einsum("ij,ij->i", X, X)
    violation = np.inf
    sweeps = 0
    while sweeps < max_iter:
        sweeps += 1
        violation = 0.0
        for i in range(n):
            xi = X[i]
            G = y[i] * np.dot(w, xi) - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(G, 0.0)
            elif a >= C:
                pg = max(G, 0.0)
            else:
                pg = G
            if abs(pg) > violation:
                violation = abs(pg)
            if pg != 0.0:
                if sq[i] > 0.0:
                    new = min(max(a - G / sq[i], 0.0), C)
                else:
                    new = C
                delta = new - a
                if delta != 0.0:
                    alpha[i] = new
                    w += (delta * y[i]) * xi
        if violation <= tol:
            break
    return sweeps, violation


def _dcd_loops(X, y, alpha, w, C, tol, max_iter):
    n, d = X.shape
    sq = np.empty(n)
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += X[i, j] * X[i, j]
        sq[i] = s
    violation = np.inf
    sweeps = 0
    while sweeps < max_iter:
        sweeps += 1
        violation = 0.0
        for i in range(n):
            dot = 0.0
            for j in range(d):
                dot += w[j] * X[i, j]
            G = y[i] * dot - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(G, 0.0)
            elif a >= C:
                pg = max(G, 0.0)
            else:
                pg = G
            if abs(pg) > violation:
                violation = abs(pg)
            if pg != 0.0:
                if sq[i] > 0.0:
                    new = min(max(a - G / sq[i], 0.0), C)
                else:
                    new = C
                delta = new - a
                if delta != 0.0:
                    alpha[i] = new
                    step = delta * y[i]
                    for j in range(d):
                        w[j] += step * X[i, j]
        if violation <= tol:
            break
    return sweeps, violation


if HAVE_NUMBA:
    dcd_numba = numba.njit(cache=True)(_dcd_loops)
else:  # pragma: no cover
    dcd_numba = None

dcd = dcd_numba if BACKEND == "numba" else dcd_numpy


def hinge_objective(X, y, w, C):
    margins = y * (X @ w)
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, 1.0 - margins).sum())
