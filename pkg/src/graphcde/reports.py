"""Verification records and deterministic JSON encoding."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


def jsonable(obj):
    """Convert numpy/containers to plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
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
        return jsonable(obj.to_dict())
    return obj


def dumps(obj):
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


@dataclass
class BoundReport:
    """Generic inequality record: margin = rhs - lhs, worst case in ``witness``."""

    name: str
    lhs: float
    rhs: float
    margin: float
    witness: dict = field(default_factory=dict)
    hypothesis_checked: bool = False
    status: str = "pass"
    details: dict = field(default_factory=dict)

    def passed(self, tol=0.0):
        return self.status == "pass" and self.margin >= -tol

    def to_dict(self):
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "witness": self.witness,
            "hypothesis_checked": self.hypothesis_checked,
            "status": self.status,
            "details": self.details,
        }

    def to_json(self):
        return dumps(self)


def verdict(margin, tol):
    return "pass" if margin >= -tol else "fail"
