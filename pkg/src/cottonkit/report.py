"""Check reports: the universal output record of every verification.

A report is a named residual measurement: what was checked, over which
grid, the worst offender, the tolerance it was held to, and whether it
passed.  Serialization is deterministic (sorted keys, repr floats) so two
identical runs produce byte-identical JSON; wall time is the one field
excluded in stable-output mode.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

__all__ = ["CheckReport", "make_report", "reports_to_json", "report_from_dict"]

SCHEMA = "cottonkit/1"


@dataclass
class CheckReport:
    check_id: str
    max_residual: float
    tolerance: float
    passed: bool
    case: Optional[str] = None
    params: dict = field(default_factory=dict)
    grid: str = ""
    worst_point: Optional[list] = None
    worst_value: Optional[float] = None
    wall_time: float = 0.0
    details: dict = field(default_factory=dict)

    def to_dict(self, stable: bool = False) -> dict:
        d = asdict(self)
        if stable:
            d.pop("wall_time")
        return d

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        case = f" [{self.case}]" if self.case else ""
        return (
            f"{verdict}  {self.check_id}{case}: max residual {self.max_residual:.3e}"
            f" (tol {self.tolerance:.1e})"
        )


def make_report(
    check_id: str,
    max_residual: float,
    tolerance: float,
    case: Optional[str] = None,
    params: Optional[dict] = None,
    grid: str = "",
    worst_point=None,
    worst_value=None,
    wall_time: float = 0.0,
    details: Optional[dict] = None,
) -> CheckReport:
    max_residual = float(max_residual)
    if worst_value is None:
        worst_value = max_residual
    return CheckReport(
        check_id=check_id,
        max_residual=max_residual,
        tolerance=float(tolerance),
        passed=bool(max_residual <= tolerance),
        case=case,
        params=dict(params or {}),
        grid=grid,
        worst_point=None if worst_point is None else [float(v) for v in worst_point],
        worst_value=None if worst_value is None else float(worst_value),
        wall_time=float(wall_time),
        details=dict(details or {}),
    )


def reports_to_json(reports, config: Optional[dict] = None, stable: bool = False) -> str:
    payload = {
        "schema": SCHEMA,
        "failed": sum(0 if r.passed else 1 for r in reports),
        "checks": [r.to_dict(stable=stable) for r in sorted(reports, key=lambda r: (r.check_id, r.case or ""))],
    }
    if config is not None:
        payload["config"] = config
    return json.dumps(payload, indent=2, sort_keys=True)


def report_from_dict(d: dict) -> CheckReport:
    return CheckReport(
        check_id=d["check_id"],
        max_residual=d["max_residual"],
        tolerance=d["tolerance"],
        passed=d["passed"],
        case=d.get("case"),
        params=d.get("params", {}),
        grid=d.get("grid", ""),
        worst_point=d.get("worst_point"),
        worst_value=d.get("worst_value"),
        wall_time=d.get("wall_time", 0.0),
        details=d.get("details", {}),
    )
