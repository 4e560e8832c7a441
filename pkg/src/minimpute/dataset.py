"""Incomplete feature matrices, CSV ingestion, bounds and repairs.

Missing cells are stored as NaN in ``values``; their interval bounds live in
the parallel ``lo``/``hi`` arrays (NaN while still pending). All arrays are
frozen after construction.
"""

from __future__ import annotations

import csv
import enum
import itertools
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, NamedTuple, Sequence

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_NULL_MARKERS = frozenset({"", "null", "NA", "nan"})
DEFAULT_EDGE_CAP = 20


class DataError(ValueError):
    """Malformed input data or an invalid request against a dataset."""


class CapExceeded(RuntimeError):
    """Exhaustive enumeration refused because the instance is too large."""

    def __init__(self, count: int, cap: int, what: str = "missing cells"):
        self.count = count
        self.cap = cap
        super().__init__(
            f"{count} {what} exceeds the enumeration cap of {cap}; "
            "use the approximate method instead"
        )


class CellRef(NamedTuple):
    row: int
    col: int


class Bounds(NamedTuple):
    lo: float
    hi: float


class Edge(enum.Enum):
    LO = "lo"
    HI = "hi"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class IncompleteMatrix:
    """An n x d feature matrix where some cells are unknown.

    ``values[i, j]`` is NaN exactly when the cell is missing. ``lo``/``hi``
    hold the cell's interval; they are NaN for observed cells and for missing
    cells whose bounds have not been inferred yet.
    """

    values: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {values.shape}")
        n, d = values.shape
        lo = _frozen(self.lo) if self.lo is not None else _frozen(np.full((n, d), np.nan))
        hi = _frozen(self.hi) if self.hi is not None else _frozen(np.full((n, d), np.nan))
        if lo.shape != values.shape or hi.shape != values.shape:
            raise DataError("bounds arrays must match the feature matrix shape")
        if np.isinf(values).any():
            raise DataError("observed values must be finite")
        names = tuple(self.feature_names) if self.feature_names else tuple(f"x{j}" for j in range(d))
        if len(names) != d:
            raise DataError(f"expected {d} feature names, got {len(names)}")
        missing = np.isnan(values)
        has_lo = ~np.isnan(lo)
        has_hi = ~np.isnan(hi)
        if (has_lo != has_hi).any():
            raise DataError("every bounded cell needs both lo and hi")
        if (has_lo & ~missing).any():
            raise DataError("bounds may only be attached to missing cells")
        if np.isinf(lo[has_lo]).any() or np.isinf(hi[has_hi]).any():
            raise DataError("bounds must be finite")
        bad = has_lo & (lo > hi)
        if bad.any():
            r, c = map(int, np.argwhere(bad)[0])
            raise DataError(f"cell ({r},{c}) has lo > hi: ({lo[r, c]}, {hi[r, c]})")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "feature_names", names)

    @classmethod
    def from_arrays(cls, values, lo=None, hi=None, feature_names=None) -> "IncompleteMatrix":
        values = np.asarray(values, dtype=np.float64)
        n, d = values.shape
        miss = np.isnan(values)

        def spread(b):
            if b is None:
                return None
            b = np.asarray(b, dtype=np.float64)
            if b.ndim == 0:
                b = np.full((n, d), float(b))
            elif b.ndim == 1:
                b = np.broadcast_to(b, (n, d)).copy()
            else:
                b = b.copy()
            b[~miss] = np.nan
            return b

        return cls(values, spread(lo), spread(hi), tuple(feature_names or ()))

    # -- shape and missingness -------------------------------------------------
    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def missing_cells(self) -> list[CellRef]:
        """MV(X) in row-major order."""
        return [CellRef(int(r), int(c)) for r, c in np.argwhere(self.missing_mask)]

    @property
    def incomplete_rows(self) -> list[int]:
        """MVE(X), ascending."""
        return [int(i) for i in np.flatnonzero(self.missing_mask.any(axis=1))]

    @property
    def incomplete_cols(self) -> list[int]:
        """MVF(X), ascending."""
        return [int(j) for j in np.flatnonzero(self.missing_mask.any(axis=0))]

    @property
    def complete_rows(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(~self.missing_mask.any(axis=1))]

    @property
    def has_bounds(self) -> bool:
        m = self.missing_mask
        return bool(np.all(~np.isnan(self.lo[m])))

    def bounds(self, cell: CellRef) -> Bounds:
        r, c = cell
        if not np.isnan(self.values[r, c]):
            raise DataError(f"cell ({r},{c}) is observed")
        return Bounds(float(self.lo[r, c]), float(self.hi[r, c]))

    @property
    def degenerate_cells(self) -> list[CellRef]:
        m = self.missing_mask & (self.lo == self.hi)
        return [CellRef(int(r), int(c)) for r, c in np.argwhere(m)]

    def require_bounds(self):
        if not self.has_bounds:
            raise DataError("some missing cells have no bounds; call infer_bounds first")

    def column_index(self, name_or_index) -> int:
        if isinstance(name_or_index, (int, np.integer)):
            if not 0 <= name_or_index < self.d:
                raise DataError(f"feature index {name_or_index} out of range")
            return int(name_or_index)
        try:
            return self.feature_names.index(name_or_index)
        except ValueError:
            raise DataError(f"unknown feature {name_or_index!r}") from None

    def take_rows(self, rows: Sequence[int]) -> "IncompleteMatrix":
        rows = np.asarray(rows, dtype=np.intp)
        return IncompleteMatrix(self.values[rows], self.lo[rows], self.hi[rows], self.feature_names)

    def take_cols(self, cols: Sequence[int]) -> "IncompleteMatrix":
        cols = np.asarray(cols, dtype=np.intp)
        names = tuple(self.feature_names[j] for j in cols)
        return IncompleteMatrix(self.values[:, cols], self.lo[:, cols], self.hi[:, cols], names)

    def fill(self, cells: Mapping[CellRef, float]) -> "IncompleteMatrix":
        """Return a copy where the given missing cells become observed."""
        values = self.values.copy()
        lo = self.lo.copy()
        hi = self.hi.copy()
        for (r, c), v in cells.items():
            if not np.isnan(self.values[r, c]):
                raise DataError(f"cell ({r},{c}) is already observed")
            values[r, c] = v
            lo[r, c] = hi[r, c] = np.nan
        return IncompleteMatrix(values, lo, hi, self.feature_names)

    def append_constant(self, value: float = 1.0, name: str = "bias") -> "IncompleteMatrix":
        col = np.full((self.n, 1), value)
        nan = np.full((self.n, 1), np.nan)
        return IncompleteMatrix(
            np.hstack([self.values, col]),
            np.hstack([self.lo, nan]),
            np.hstack([self.hi, nan]),
            self.feature_names + (name,),
        )


@dataclass(frozen=True)
class LabelVector:
    y: np.ndarray
    task: str = "classification"

    def __post_init__(self):
        y = _frozen(self.y)
        if y.ndim != 1:
            raise DataError("labels must be a 1-D vector")
        if not np.isfinite(y).all():
            raise DataError("labels must be complete and finite")
        if self.task not in ("classification", "regression"):
            raise DataError(f"unknown task {self.task!r}")
        if self.task == "classification" and not np.isin(y, (-1.0, 1.0)).all():
            raise DataError("classification labels must be -1 or +1")
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.y.shape[0]

    def take(self, rows) -> "LabelVector":
        return LabelVector(self.y[np.asarray(rows, dtype=np.intp)], self.task)


@dataclass(frozen=True, eq=False)
class CompleteMatrix:
    """A repair: every cell holds a real value."""

    values: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2:
            raise DataError("matrix must be 2-D")
        if not np.isfinite(values).all():
            raise DataError("complete matrix must be finite everywhere")
        object.__setattr__(self, "values", values)
        if not self.feature_names:
            object.__setattr__(self, "feature_names", tuple(f"x{j}" for j in range(values.shape[1])))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class EdgeAssignment:
    """One endpoint choice per missing cell, i.e. one edge repair."""

    choices: Mapping[CellRef, Edge] = field(default_factory=dict)

    def values(self, X: IncompleteMatrix) -> dict[CellRef, float]:
        return {
            c: float(X.lo[c.row, c.col] if e is Edge.LO else X.hi[c.row, c.col])
            for c, e in self.choices.items()
        }

    def to_json(self) -> list:
        return [[c.row, c.col, e.value] for c, e in self.choices.items()]

    def __hash__(self):
        return hash(tuple(self.choices.items()))


# -- CSV ---------------------------------------------------------------------


def _parse_float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(text)
    return v


def load_csv(
    path,
    label_col: str,
    null_markers=DEFAULT_NULL_MARKERS,
    task: str | None = None,
) -> tuple[IncompleteMatrix, LabelVector]:
    """Read a headed CSV into an incomplete matrix and a label vector.

    Fields equal to any of ``null_markers`` (after stripping whitespace) become
    missing cells with pending bounds. ``task`` defaults to classification when
    every label is -1 or +1, regression otherwise.
    """
    markers = {m.strip() for m in null_markers}
    path = Path(path)
    with path.open(newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_col not in header:
            raise DataError(f"{path}: label column {label_col!r} not in header {header}")
        li = header.index(label_col)
        feat_idx = [k for k in range(len(header)) if k != li]
        rows, labels = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not t.strip() for t in rec):
                continue
            if len(rec) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            lab = rec[li].strip()
            if lab in markers:
                raise DataError(f"{path}:{lineno}: missing label value (row {len(rows)})")
            try:
                labels.append(_parse_float(lab))
            except ValueError:
                raise DataError(f"{path}:{lineno}: label {lab!r} is not numeric") from None
            row = []
            for j, k in enumerate(feat_idx):
                tok = rec[k].strip()
                if tok in markers:
                    row.append(np.nan)
                    continue
                try:
                    row.append(_parse_float(tok))
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: cell (row {len(rows)}, col {j}, {header[k]!r}) "
                        f"value {tok!r} is neither numeric nor a null marker"
                    ) from None
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(feat_idx))
    y = np.array(labels)
    if task is None:
        task = "classification" if np.isin(y, (-1.0, 1.0)).all() else "regression"
    X = IncompleteMatrix(values, None, None, tuple(header[k] for k in feat_idx))
    return X, LabelVector(y, task)


def load_bounds_file(path) -> dict[str, Bounds]:
    """Read a ``feature,lo,hi`` CSV into a per-feature bounds table."""
    table = {}
    with Path(path).open(newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not {"feature", "lo", "hi"} <= set(reader.fieldnames):
            raise DataError(f"{path}: bounds file needs columns feature,lo,hi")
        for lineno, rec in enumerate(reader, start=2):
            try:
                lo, hi = _parse_float(rec["lo"]), _parse_float(rec["hi"])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric bound") from None
            if lo > hi:
                raise DataError(f"{path}:{lineno}: lo > hi for {rec['feature']!r}")
            table[rec["feature"].strip()] = Bounds(lo, hi)
    return table


# -- bounds ------------------------------------------------------------------


def infer_bounds(X: IncompleteMatrix, policy="observed") -> IncompleteMatrix:
    """Attach interval bounds to every missing cell.

    ``policy`` is one of:

    * ``"observed"`` -- [min, max] of the feature's observed values;
    * ``("global", lo, hi)`` -- the same interval everywhere;
    * a mapping ``feature name or index -> (lo, hi)``; features not listed
      fall back to the observed range.
    """
    lo = np.full(X.values.shape, np.nan)
    hi = np.full(X.values.shape, np.nan)
    miss = X.missing_mask
    table: dict[int, Bounds] = {}
    if isinstance(policy, tuple) and policy and policy[0] == "global":
        _, glo, ghi = policy
        if not glo <= ghi:
            raise DataError(f"global bounds need lo <= hi, got ({glo}, {ghi})")
        table = {j: Bounds(float(glo), float(ghi)) for j in range(X.d)}
    elif isinstance(policy, Mapping):
        table = {X.column_index(k): Bounds(float(v[0]), float(v[1])) for k, v in policy.items()}
    elif policy != "observed":
        raise DataError(f"unknown bounds policy {policy!r}")

    for j in X.incomplete_cols:
        if j in table:
            b = table[j]
        else:
            col = X.values[:, j]
            obs = col[~np.isnan(col)]
            if obs.size == 0:
                raise DataError(
                    f"feature {X.feature_names[j]!r} has no observed values; "
                    "supply explicit bounds for it"
                )
            b = Bounds(float(obs.min()), float(obs.max()))
            if b.lo == b.hi:
                log.warning("feature %r: degenerate observed bounds [%g, %g]", X.feature_names[j], b.lo, b.hi)
        lo[miss[:, j], j] = b.lo
        hi[miss[:, j], j] = b.hi
    return IncompleteMatrix(X.values, lo, hi, X.feature_names)


# -- repairs -----------------------------------------------------------------


def edge_choices(X: IncompleteMatrix, cell: CellRef) -> tuple[Edge, ...]:
    r, c = cell
    return (Edge.LO,) if X.lo[r, c] == X.hi[r, c] else (Edge.LO, Edge.HI)


def count_edge_assignments(X: IncompleteMatrix) -> int:
    X.require_bounds()
    m = X.missing_mask
    return 2 ** int(np.count_nonzero(X.lo[m] != X.hi[m]))


def enumerate_edge_assignments(
    X: IncompleteMatrix, cap: int = DEFAULT_EDGE_CAP, cells: Sequence[CellRef] | None = None
) -> Iterator[EdgeAssignment]:
    """Yield every edge repair of ``X`` in lexicographic order (Lo before Hi).

    The first missing cell in row-major order varies slowest. Degenerate cells
    (lo == hi) contribute a single choice. ``cells`` restricts the enumeration
    to a subset of MV(X).
    """
    X.require_bounds()
    cells = list(X.missing_cells if cells is None else cells)
    if len(cells) > cap:
        raise CapExceeded(len(cells), cap)
    options = [edge_choices(X, c) for c in cells]
    for combo in itertools.product(*options):
        yield EdgeAssignment(dict(zip(cells, combo)))


def edge_matrix(X: IncompleteMatrix, assignment: EdgeAssignment) -> np.ndarray:
    """Fast path: the dense repaired array for an edge assignment, unchecked."""
    out = np.array(X.values)
    for (r, c), e in assignment.choices.items():
        out[r, c] = X.lo[r, c] if e is Edge.LO else X.hi[r, c]
    return out


def apply_assignment(X: IncompleteMatrix, a) -> CompleteMatrix:
    """Materialize a repair from an edge assignment or explicit cell values."""
    if isinstance(a, EdgeAssignment):
        X.require_bounds()
        vals = a.values(X)
    else:
        vals = {CellRef(*k): float(v) for k, v in dict(a).items()}
    out = np.array(X.values)
    for cell in X.missing_cells:
        if cell not in vals:
            raise DataError(f"assignment does not cover missing cell {tuple(cell)}")
    for cell, v in vals.items():
        r, c = cell
        if not (0 <= r < X.n and 0 <= c < X.d) or not np.isnan(X.values[r, c]):
            raise DataError(f"cell {tuple(cell)} is not a missing cell of this matrix")
        lo, hi = X.lo[r, c], X.hi[r, c]
        if not np.isnan(lo) and not lo <= v <= hi:
            raise DataError(f"value {v} for cell {tuple(cell)} is outside its bounds [{lo}, {hi}]")
        out[r, c] = v
    return CompleteMatrix(out, X.feature_names)
