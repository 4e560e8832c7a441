"""Minimal imputation sets for linear SVM.

An incomplete example must be imputed exactly when it is a support vector
under some repair, and it suffices to look at edge repairs (every missing cell
at one of its interval endpoints). ``exact_minimal_set_svm`` enumerates all
edge repairs; ``approx_minimal_set_svm`` builds one adversarial edge repair per
example by greedy coordinate scans and never reports an example the exact
search would not.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import optimize, spatial, stats

from .dataset import (
    DEFAULT_EDGE_CAP,
    Bounds,
    CellRef,
    Edge,
    EdgeAssignment,
    IncompleteMatrix,
    edge_matrix,
    enumerate_edge_assignments,
)
from .report import MinimalSetReport
from .svm import SvmParams, _labels, train_svm, warm_update

log = logging.getLogger(__name__)


@dataclass
class VisitedEdges:
    """Values tried for each missing cell while scanning one example.

    ``corners`` holds every edge repair that was trained during the scan, one
    row per repair, columns ordered like ``cells``.
    """

    values: dict[CellRef, tuple[float, ...]]
    bounds: dict[CellRef, Bounds]
    corners: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    @property
    def cells(self) -> list[CellRef]:
        return list(self.values)

    def edges(self) -> dict[CellRef, frozenset[Edge]]:
        out = {}
        for c, vals in self.values.items():
            lo, hi = self.bounds[c]
            e = set()
            if lo in vals:
                e.add(Edge.LO)
            if hi in vals:
                e.add(Edge.HI)
            out[c] = frozenset(e)
        return out


def exact_minimal_set_svm(
    X: IncompleteMatrix,
    y,
    params: SvmParams | None = None,
    cap: int = DEFAULT_EDGE_CAP,
) -> MinimalSetReport:
    """Enumerate every edge repair and collect incomplete support vectors.

    Each repair is trained from scratch. An example stops being checked once a
    witnessing repair has been found, and the scan ends as soon as every
    incomplete example has a witness.
    """
    params = params or SvmParams()
    yv = _labels(y)
    t0 = time.perf_counter()
    X.require_bounds()
    assignments = enumerate_edge_assignments(X, cap=cap)
    pending = set(X.incomplete_rows)
    incomplete = sorted(pending)
    evidence: dict[int, dict] = {}
    trainings = sweeps = 0
    unconverged: list[int] = []
    for k, a in enumerate(assignments):
        Xe = edge_matrix(X, a)
        model = train_svm(Xe, yv, params)
        trainings += 1
        sweeps += model.sweeps
        if not model.converged:
            unconverged.append(k)
        if not pending:
            break
        margins = yv * (Xe @ model.w)
        for i in sorted(pending):
            if margins[i] <= 1.0 + params.sv_tol:
                evidence[i] = {"assignment_id": k, "cells": a.to_json(), "margin": float(margins[i])}
                pending.discard(i)
        if not pending:
            break
    members = sorted(evidence)
    stats_ = {
        "trainings": trainings,
        "sweeps": sweeps,
        "unconverged": unconverged,
        "missing_cells": len(X.missing_cells),
        "incomplete_examples": len(incomplete),
        "seconds": time.perf_counter() - t0,
    }
    if unconverged:
        log.warning("%d edge-repair trainings hit max_iter (first id %d)", len(unconverged), unconverged[0])
    return MinimalSetReport(
        kind="examples",
        method="exact",
        members=members,
        skipped=[i for i in incomplete if i not in evidence],
        evidence=evidence,
        stats=stats_,
    )


def random_edge_assignment(X: IncompleteMatrix, seed=0) -> EdgeAssignment:
    rng = np.random.default_rng(seed)
    choices = {}
    for c in X.missing_cells:
        flip = rng.integers(0, 2)
        choices[c] = Edge.HI if flip and X.lo[c] != X.hi[c] else Edge.LO
    return EdgeAssignment(choices)


def approx_minimal_set_svm(
    X: IncompleteMatrix,
    y,
    params: SvmParams | None = None,
    seed=0,
    warm: bool = True,
) -> tuple[MinimalSetReport, dict[int, VisitedEdges]]:
    """Greedy single-cell scans toward an edge repair that puts each example
    on or inside the margin.

    Starting from a seeded random edge repair, for each incomplete example
    ``i`` every missing cell is tried at both endpoints and set to whichever
    gives the smaller margin ``y_i * w.x_i`` (ties keep ``lo``). The repair
    carries over from one example to the next. ``i`` is reported when it is a
    support vector of a fresh (cold) training on the final repair, so each
    reported example has an edge repair witnessing it.

    ``warm=False`` replaces the warm-started retrains in the scan with cold
    ones.
    """
    params = params or SvmParams()
    yv = _labels(y)
    t0 = time.perf_counter()
    X.require_bounds()
    cells = X.missing_cells
    incomplete = X.incomplete_rows
    assignment = dict(random_edge_assignment(X, seed).choices)
    Xe = edge_matrix(X, EdgeAssignment(assignment))
    model = train_svm(Xe, yv, params)
    trainings, sweeps, unconverged = 1, model.sweeps, int(not model.converged)
    bounds = {c: Bounds(float(X.lo[c]), float(X.hi[c])) for c in cells}

    def retrain(base, Xbase, cell, value):
        nonlocal trainings, sweeps, unconverged
        if warm:
            m, Xn = warm_update(base, Xbase, (cell, value), yv)
            if m is base:
                return m, Xn
        else:
            if Xbase[cell] == value:
                return base, Xbase
            Xn = np.array(Xbase)
            Xn[cell] = value
            m = train_svm(Xn, yv, params)
        trainings += 1
        sweeps += m.sweeps
        unconverged += int(not m.converged)
        return m, Xn

    evidence: dict[int, dict] = {}
    visited: dict[int, VisitedEdges] = {}
    for i in incomplete:
        tried = {c: set() for c in cells}
        corners = set()
        for cell in cells:
            lo, hi = bounds[cell]
            m_lo, X_lo = retrain(model, Xe, cell, lo)
            m_hi, X_hi = retrain(model, Xe, cell, hi)
            margin_lo = yv[i] * float(X_lo[i] @ m_lo.w)
            margin_hi = yv[i] * float(X_hi[i] @ m_hi.w)
            tried[cell].update((lo, hi))
            for Xc in (X_lo, X_hi):
                corners.add(tuple(Xc[c] for c in cells))
            if margin_lo <= margin_hi:
                assignment[cell] = Edge.LO
                model, Xe = m_lo, X_lo
            else:
                assignment[cell] = Edge.HI
                model, Xe = m_hi, X_hi
        final = train_svm(Xe, yv, params)
        trainings += 1
        sweeps += final.sweeps
        unconverged += int(not final.converged)
        # same arithmetic as the exact search, so the two agree bit for bit
        margin = float((yv * (Xe @ final.w))[i])
        if margin <= 1.0 + params.sv_tol:
            evidence[i] = {"cells": EdgeAssignment(dict(assignment)).to_json(), "margin": margin}
        model = final
        if cells:
            corner_arr = np.array(sorted(corners), dtype=np.float64).reshape(-1, len(cells))
        else:
            corner_arr = np.empty((0, 0))
        visited[i] = VisitedEdges({c: tuple(sorted(v)) for c, v in tried.items()}, dict(bounds), corner_arr)

    report = MinimalSetReport(
        kind="examples",
        method="approx",
        members=sorted(evidence),
        skipped=[i for i in incomplete if i not in evidence],
        evidence=evidence,
        stats={
            "trainings": trainings,
            "sweeps": sweeps,
            "unconverged": unconverged,
            "missing_cells": len(cells),
            "incomplete_examples": len(incomplete),
            "seed": int(seed) if np.ndim(seed) == 0 and seed is not None else None,
            "warm": warm,
            "seconds": time.perf_counter() - t0,
        },
    )
    return report, visited


# -- miss probability --------------------------------------------------------


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def mass(self, a: float, b: float) -> float:
        width = self.hi - self.lo
        if width <= 0:
            return 0.0
        a, b = max(a, self.lo), min(b, self.hi)
        return max(b - a, 0.0) / width

    def sample(self, rng, size):
        return rng.uniform(self.lo, self.hi, size)


@dataclass(frozen=True)
class TruncatedNormal:
    mu: float
    sigma: float
    lo: float
    hi: float

    def mass(self, a: float, b: float) -> float:
        a, b = max(a, self.lo), min(b, self.hi)
        if b <= a or self.sigma <= 0:
            return 0.0
        z = stats.norm(self.mu, self.sigma)
        return float(z.cdf(b) - z.cdf(a))

    def sample(self, rng, size):
        a = (self.lo - self.mu) / self.sigma
        b = (self.hi - self.mu) / self.sigma
        return stats.truncnorm.rvs(a, b, loc=self.mu, scale=self.sigma, size=size, random_state=rng)


def _density(visited: VisitedEdges, densities, cell):
    if densities and cell in densities:
        return densities[cell]
    lo, hi = visited.bounds[cell]
    return Uniform(lo, hi)


def miss_probability(visited: VisitedEdges, densities: Mapping[CellRef, object] | None = None) -> float:
    """Per-cell box ratio of probability mass covered by the visited values.

    For each cell, the mass of its density between the smallest and largest
    visited value is divided by the mass over its full bounds; the result is
    the product over cells. A cell whose bounds carry no mass (lo == hi)
    contributes a factor of 1. Cells default to a uniform density on their
    bounds.
    """
    p = 1.0
    for cell, vals in visited.values.items():
        lo, hi = visited.bounds[cell]
        g = _density(visited, densities, cell)
        total = g.mass(lo, hi)
        if total <= 0.0:
            continue
        p *= g.mass(min(vals), max(vals)) / total
    return p


def miss_probabilities(visited: Mapping[int, VisitedEdges], densities=None) -> dict[int, float]:
    return {i: miss_probability(v, densities) for i, v in visited.items()}


def hull_probability(
    visited: VisitedEdges, densities=None, samples: int = 4000, seed=0
) -> float:
    """Monte Carlo mass of the convex hull of the trained edge repairs.

    This is the region whose repairs the scan's conclusion extends to, rather
    than the per-cell box used by ``miss_probability``. Cells with degenerate
    bounds are dropped before building the hull.
    """
    cells = visited.cells
    keep = [k for k, c in enumerate(cells) if visited.bounds[c][0] < visited.bounds[c][1]]
    if not keep:
        return 1.0
    corners = np.unique(visited.corners[:, keep], axis=0)
    rng = np.random.default_rng(seed)
    pts = np.column_stack([_density(visited, densities, cells[k]).sample(rng, samples) for k in keep])
    dim = len(keep)
    if corners.shape[0] <= dim:
        return 0.0
    try:
        tri = spatial.Delaunay(corners)
        inside = tri.find_simplex(pts) >= 0
    except spatial.QhullError:
        inside = np.array([_in_hull_lp(corners, p) for p in pts])
    return float(inside.mean())


def _in_hull_lp(corners: np.ndarray, p: np.ndarray) -> bool:
    k = corners.shape[0]
    A_eq = np.vstack([corners.T, np.ones((1, k))])
    b_eq = np.append(p, 1.0)
    res = optimize.linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return res.status == 0


def certain_model_exists_svm(X: IncompleteMatrix, y, params: SvmParams | None = None, cap=DEFAULT_EDGE_CAP) -> bool:
    """True when no incomplete example is a support vector in any edge repair."""
    return not exact_minimal_set_svm(X, y, params, cap).members


def impute_rows(X: IncompleteMatrix, rows, values: Mapping[CellRef, float]) -> IncompleteMatrix:
    """Make every missing cell of ``rows`` observed using ``values``."""
    rows = set(rows)
    return X.fill({c: values[c] for c in X.missing_cells if c.row in rows})


__all__ = [
    "VisitedEdges",
    "exact_minimal_set_svm",
    "approx_minimal_set_svm",
    "random_edge_assignment",
    "miss_probability",
    "miss_probabilities",
    "hull_probability",
    "Uniform",
    "TruncatedNormal",
    "certain_model_exists_svm",
    "impute_rows",
]
