"""Run reports and their JSON / CSV serialization."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import __version__


@dataclass
class Verdict:
    name: str
    bound: str  # the inequality that was tested, in words
    value: object
    passed: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "bound": self.bound, "value": self.value, "passed": self.passed}


@dataclass
class RunReport:
    command: str
    config: dict
    results: dict = dc_field(default_factory=dict)
    verdicts: list = dc_field(default_factory=list)
    rows: list | None = None  # sweep rows, the only thing CSV can carry
    wall_clock: float | None = None
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, name: str, bound: str, value, passed: bool) -> None:
        self.verdicts.append(Verdict(name, bound, value, bool(passed)))

    def as_dict(self, clock: bool = True) -> dict:
        out = {
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "verdicts": [v.as_dict() for v in self.verdicts],
            "passed": self.passed,
        }
        if self.rows is not None:
            out["rows"] = self.rows
        if clock and self.wall_clock is not None:
            out["wall_clock_s"] = self.wall_clock
        return out


def plain(obj):
    """Convert to JSON-ready builtins; non-finite floats become strings."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "as_dict"):
            return plain(obj.as_dict())
        return plain(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def to_json(obj) -> bytes:
    return (json.dumps(plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n").encode()


def emit(report: RunReport, fmt: str = "json", clock: bool = True) -> bytes:
    if fmt == "json":
        return to_json(report.as_dict(clock))
    if fmt == "csv":
        if report.rows is None:
            raise ValueError("CSV output is only available for sweep reports")
        return rows_csv(report.rows)
    raise ValueError(f"unknown format {fmt!r}")


SWEEP_COLUMNS = ("rho", "corrupted", "epsilon", "recovery", "disagreement_with_g",
                 "margin_min", "margin_mean", "flagged")


def rows_csv(rows, columns=SWEEP_COLUMNS) -> bytes:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(plain(r))
    return buf.getvalue().encode()
