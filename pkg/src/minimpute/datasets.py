"""Bundled datasets."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

BUILTIN = {
    "breast_cancer": ("breast_cancer_wisconsin.csv", "malignant"),
}


def builtin_path(name: str) -> Path:
    try:
        fname, _ = BUILTIN[name]
    except KeyError:
        raise KeyError(f"no bundled dataset {name!r}; choose from {sorted(BUILTIN)}") from None
    return Path(str(resources.files("minimpute") / "data" / fname))


def builtin_label(name: str) -> str:
    return BUILTIN[name][1]


def breast_cancer_path() -> Path:
    """Wisconsin breast cancer biopsies: 699 rows, 9 integer features in
    [1, 10], 16 missing ``bare_nuclei`` cells, label ``malignant`` in {-1, +1}."""
    return builtin_path("breast_cancer")
