"""Minimal-set report and its JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

SCHEMA_VERSION = 1


@dataclass
class MinimalSetReport:
    """Which incomplete examples (SVM) or features (LR) must be imputed.

    ``evidence`` maps each member to a JSON-ready witness: the edge assignment
    under which an example is a support vector, or the selection order and
    cosine of a feature. ``alternatives`` lists other minimal sets of the same
    size when the minimum is not unique.
    """

    kind: str
    method: str
    members: list[int]
    skipped: list[int]
    evidence: dict[int, Any] = field(default_factory=dict)
    stats: dict[str, Any] = field(default_factory=dict)
    alternatives: list[list[int]] = field(default_factory=list)
    verdict: dict[str, Any] | None = None

    def __post_init__(self):
        if self.kind not in ("examples", "features"):
            raise ValueError(f"unknown report kind {self.kind!r}")
        if self.method not in ("exact", "approx"):
            raise ValueError(f"unknown method {self.method!r}")
        self.members = sorted(int(i) for i in self.members)
        self.skipped = sorted(int(i) for i in self.skipped)
        if set(self.members) & set(self.skipped):
            raise ValueError("members and skipped overlap")

    @property
    def incomplete(self) -> list[int]:
        return sorted(self.members + self.skipped)

    def to_dict(self, timings: bool = False) -> dict:
        key = "row" if self.kind == "examples" else "feature"
        wit = "witness_assignment" if self.kind == "examples" else "evidence"
        stats = {k: v for k, v in self.stats.items() if timings or k != "seconds"}
        out = {
            "schema": SCHEMA_VERSION,
            "kind": self.kind,
            "method": self.method,
            "members": [{key: i, wit: self.evidence.get(i)} for i in self.members],
            "skipped": list(self.skipped),
            "stats": stats,
        }
        if self.alternatives:
            out["alternatives"] = [list(s) for s in self.alternatives]
        if self.verdict is not None:
            out["verdict"] = self.verdict
        return out

    def to_json(self, timings: bool = False) -> str:
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "MinimalSetReport":
        key = "row" if data["kind"] == "examples" else "feature"
        wit = "witness_assignment" if data["kind"] == "examples" else "evidence"
        members = [m[key] for m in data["members"]]
        return cls(
            kind=data["kind"],
            method=data["method"],
            members=members,
            skipped=list(data["skipped"]),
            evidence={m[key]: m[wit] for m in data["members"]},
            stats=dict(data.get("stats", {})),
            alternatives=[list(s) for s in data.get("alternatives", [])],
            verdict=data.get("verdict"),
        )

    @classmethod
    def from_json(cls, text: str) -> "MinimalSetReport":
        return cls.from_dict(json.loads(text))
