"""Run records: the JSON-serializable result of every training or pipeline run."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .problems import QuboProblem

SCHEMA_VERSION = 1

__all__ = ["RunRecord", "SCHEMA_VERSION", "problem_descriptor"]


def problem_descriptor(q: QuboProblem) -> dict:
    """Stable descriptor: size plus a content hash of the cost matrix."""
    digest = hashlib.sha256()
    digest.update(str(q.n_c).encode())
    digest.update(np.ascontiguousarray(q.Q).tobytes())
    return {"kind": "qubo", "n_c": q.n_c, "sha256": digest.hexdigest()}


@dataclass
class RunRecord:
    """Everything needed to reproduce and audit one run.

    Volatile values (creation time, wall-clock duration) serialize under the
    single "timestamp" key so reproducibility comparisons can mask one field.
    """

    problem: dict
    ansatz: dict
    optimizer: dict
    seeds: dict
    trace: list[float]
    best_bitstring: str
    best_cost: float
    c_norm: float | None = None
    constraints: list[list[int]] = field(default_factory=list)
    postselection: dict | None = None
    extras: dict = field(default_factory=dict)
    created_utc: str = ""
    wall_ms: float = 0.0

    def __post_init__(self):
        if not self.created_utc:
            self.created_utc = datetime.now(timezone.utc).isoformat()

    @property
    def iterations(self) -> int:
        return len(self.trace)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("created_utc")
        d.pop("wall_ms")
        d["schema_version"] = SCHEMA_VERSION
        d["iterations"] = self.iterations
        d["timestamp"] = {"created_utc": self.created_utc, "wall_ms": self.wall_ms}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        d = dict(d)
        ts = d.pop("timestamp", {})
        d.pop("schema_version", None)
        d.pop("iterations", None)
        return cls(created_utc=ts.get("created_utc", ""),
                   wall_ms=ts.get("wall_ms", 0.0), **d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "RunRecord":
        return cls.from_dict(json.loads(Path(path).read_text()))
