"""Check reports and the structured-text (JSON) serialization shared by all artifacts."""

from __future__ import annotations

import datetime as _dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

HEADER_PREFIX = "# generated: "


@dataclass
class CheckReport:
    """Outcome of a sampled check: pass flag, worst violation and a witness."""

    name: str
    passed: bool
    max_violation: float
    n_checked: int
    witness: list | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "max_violation": self.max_violation,
            "n_checked": int(self.n_checked),
            "witness": self.witness,
            "details": self.details,
        }


def clean(obj):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if hasattr(obj, "to_dict"):
        return clean(obj.to_dict())
    return obj


def restore_float(v) -> float:
    return float(v)  # float("inf") / float("nan") parse the sentinel strings


def dumps(obj) -> str:
    return json.dumps(clean(obj), indent=2) + "\n"


def write_report(path, obj, timestamp: bool = True) -> Path:
    """Write ``obj`` as JSON; the timestamp lives alone on the first line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    head = f"{HEADER_PREFIX}{_dt.datetime.now(_dt.timezone.utc).isoformat()}\n" if timestamp else ""
    path.write_text(head + dumps(obj))
    return path


def read_report(path) -> dict:
    lines = Path(path).read_text().splitlines()
    if lines and lines[0].startswith(HEADER_PREFIX):
        lines = lines[1:]
    return json.loads("\n".join(lines))
