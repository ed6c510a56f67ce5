"""Structured result reports shared by the evaluation tasks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import FormatError, ValidationError


@dataclass(eq=False)
class EvalReport:
    """Per-run metric values for one task plus the config that produced them.

    ``mean``/``std`` are derived, never stored independently, so they cannot
    drift out of sync with ``values`` (std is the sample estimate, ddof=1;
    0.0 for a single run).
    """

    task: str
    metric: str
    values: tuple[float, ...]
    config: dict[str, Any] = field(default_factory=dict)
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.values = tuple(float(v) for v in self.values)
        if not self.values:
            raise ValidationError("a report needs at least one run value")

    @property
    def run_count(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        if len(self.values) < 2:
            return 0.0
        return float(np.std(self.values, ddof=1))

    def to_dict(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "metric": self.metric,
            "runs": self.run_count,
            "mean": self.mean,
            "std": self.std,
            "values": list(self.values),
            "config": self.config,
            "details": self.details,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EvalReport":
        report = cls(
            task=data["task"],
            metric=data["metric"],
            values=tuple(data["values"]),
            config=dict(data.get("config", {})),
            details=dict(data.get("details", {})),
        )
        for key, got in (("mean", report.mean), ("std", report.std), ("runs", report.run_count)):
            if key in data and abs(data[key] - got) > 1e-9:
                raise FormatError(f"stored {key} {data[key]} inconsistent with values ({got})")
        return report

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def __str__(self) -> str:
        cfg = " ".join(f"{k}={v}" for k, v in sorted(self.config.items()))
        return (
            f"{self.task} [{self.metric}] runs={self.run_count} "
            f"mean={self.mean:.4f} std={self.std:.4f}" + (f" ({cfg})" if cfg else "")
        )
