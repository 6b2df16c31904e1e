"""Check results and their human/machine renderings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any


@dataclass
class CheckResult:
    name: str
    passed: bool
    checked: int = 0
    counterexample: str | None = None

    def to_record(self) -> dict[str, Any]:
        return {
            "check": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "counterexample": self.counterexample,
        }


@dataclass
class Report:
    title: str
    checks: list[CheckResult] = field(default_factory=list)
    records: list[dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def extend(self, other: "Report") -> "Report":
        self.checks.extend(other.checks)
        self.records.extend(other.records)
        return self

    def to_text(self) -> str:
        return render_report(self)[0]


def render_report(report: Report) -> tuple[str, str]:
    """Human text and JSON lines; field order is fixed so equal runs give equal bytes."""
    lines = [f"== {report.title} =="]
    jsonl = [json.dumps({"report": report.title, "passed": report.passed})]
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        line = f"{status} {c.name} (checked {c.checked})"
        if c.counterexample:
            line += f": {c.counterexample}"
        lines.append(line)
        jsonl.append(json.dumps(c.to_record()))
    for rec in report.records:
        lines.append(_record_line(rec))
        jsonl.append(json.dumps(rec))
    return "\n".join(lines) + "\n", "\n".join(jsonl) + "\n"


def _record_line(rec: dict[str, Any]) -> str:
    if rec.get("kind") == "capture":
        return f"level {rec['level']}; F={rec['F']}; indices={rec['indices']}"
    return "; ".join(f"{k}={v}" for k, v in rec.items())
