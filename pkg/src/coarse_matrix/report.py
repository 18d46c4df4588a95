"""Verification reports shared by the constructions and the CLI."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any


def jsonable(x: Any) -> Any:
    """Numbers as ints where exact, infinity as the string ``"inf"``."""
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, (int,)):
        return x
    if isinstance(x, float) or hasattr(x, "__float__"):
        v = float(x)
        if math.isinf(v):
            return "inf"
        return int(v) if v.is_integer() else v
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if hasattr(x, "to_json"):
        return x.to_json()
    raise TypeError(f"cannot serialise {type(x).__name__}")


@dataclass
class DecompositionReport:
    """Named pass/fail verdicts plus the measured numbers behind them."""

    kind: str
    input: dict = field(default_factory=dict)
    scales: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    measured: dict = field(default_factory=dict)
    certificates: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.verdicts.items() if not v]

    def check(self, name: str, ok: bool) -> bool:
        self.verdicts[name] = bool(ok)
        return bool(ok)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "input": jsonable(self.input),
            "scales": jsonable(self.scales),
            "certificates": jsonable(self.certificates),
            "measured": jsonable(self.measured),
            "verdicts": {k: bool(v) for k, v in self.verdicts.items()},
            "passed": self.passed,
            "notes": list(self.notes),
        }


class ConstructionDefect(RuntimeError):
    """A construction produced output that fails its own verification."""

    def __init__(self, report: DecompositionReport):
        failed = ", ".join(report.failed()) or "unknown"
        super().__init__(f"{report.kind}: failed {failed}")
        self.report = report
        self.condition = failed
