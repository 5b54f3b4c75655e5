"""Run reports with a stable, versioned JSON form."""
import json
import math
from dataclasses import dataclass, field

import numpy as np

SCHEMA = 1
TASKS = ("embed", "levscore", "basis", "regress", "selftest", "bench")
FIELDS = ("schema", "task", "seed", "params", "rows_in", "cols_in", "rows_out",
          "metrics", "runtime_ms", "pass", "flags")


def _clean(v):
    """Make ``v`` JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def _restore(v):
    if isinstance(v, dict):
        return {k: _restore(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_restore(x) for x in v]
    if v in ("inf", "-inf", "nan"):
        return float(v)
    return v


@dataclass
class RunReport:
    task: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    rows_in: int = 0
    cols_in: int = 0
    rows_out: int = 0
    metrics: dict = field(default_factory=dict)
    runtime_ms: float = None
    passed: bool = True
    flags: list = field(default_factory=list)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")

    def flag(self, name):
        if name not in self.flags:
            self.flags.append(name)

    def to_dict(self):
        return {
            "schema": SCHEMA,
            "task": self.task,
            "seed": int(self.seed),
            "params": _clean(self.params),
            "rows_in": int(self.rows_in),
            "cols_in": int(self.cols_in),
            "rows_out": int(self.rows_out),
            "metrics": _clean(self.metrics),
            "runtime_ms": None if self.runtime_ms is None else _clean(round(float(self.runtime_ms), 3)),
            "pass": bool(self.passed),
            "flags": sorted(set(self.flags)),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d):
        extra = set(d) - set(FIELDS)
        if extra:
            raise ValueError(f"unknown report fields: {sorted(extra)}")
        missing = set(FIELDS) - set(d)
        if missing:
            raise ValueError(f"missing report fields: {sorted(missing)}")
        if d["schema"] != SCHEMA:
            raise ValueError(f"unsupported schema {d['schema']!r}")
        return cls(task=d["task"], seed=d["seed"], params=_restore(d["params"]),
                   rows_in=d["rows_in"], cols_in=d["cols_in"], rows_out=d["rows_out"],
                   metrics=_restore(d["metrics"]), runtime_ms=d["runtime_ms"],
                   passed=d["pass"], flags=list(d["flags"]))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))
