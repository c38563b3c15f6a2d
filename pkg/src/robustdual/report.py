"""Run reports: a versioned JSON body plus a plain-text summary.

Reports are deterministic by construction: no timestamps, insertion-
ordered keys, and every floating-point field rounded to 12 significant
digits before serialization.  Rerunning a command with the same inputs
and seed reproduces both renderings byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

SCHEMA = "robustdual-report/1"

Cell = Union[str, int, float, bool, None]


def round12(x: float) -> float:
    """Round to the 12 significant digits the report prints."""
    if not math.isfinite(x):
        return x
    return float(f"{x:.12g}")


def fmt(x) -> str:
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _rounded(value):
    if isinstance(value, float):
        return round12(value)
    if isinstance(value, (list, tuple)):
        return [_rounded(v) for v in value]
    if isinstance(value, dict):
        return {k: _rounded(v) for k, v in value.items()}
    return value


@dataclass
class Table:
    columns: Tuple[str, ...]
    rows: List[List[Cell]]

    def text_lines(self) -> List[str]:
        cells = [[fmt(c) for c in row] for row in self.rows]
        widths = [
            max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
            for i, h in enumerate(self.columns)
        ]
        head = "  ".join(h.ljust(w) for h, w in zip(self.columns, widths))
        sep = "  ".join("-" * w for w in widths)
        body = ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells]
        return [head.rstrip(), sep] + [b.rstrip() for b in body]


@dataclass
class RunReport:
    """Accumulates numbers, tables and pass/fail checks for one command."""

    command: str
    config: Dict[str, Cell] = field(default_factory=dict)
    numbers: Dict[str, Cell] = field(default_factory=dict)
    vectors: Dict[str, List[float]] = field(default_factory=dict)
    tables: Dict[str, Table] = field(default_factory=dict)
    checks: List[Tuple[str, bool, str]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def check(self, name: str, ok: bool, detail: str = "") -> bool:
        self.checks.append((name, bool(ok), detail))
        return bool(ok)

    def add_table(self, name: str, columns: Sequence[str], rows) -> None:
        self.tables[name] = Table(tuple(columns), [list(r) for r in rows])

    @property
    def all_checks_pass(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def body(self) -> dict:
        doc: dict = {"schema": SCHEMA, "command": self.command}
        doc["config"] = _rounded(self.config)
        if self.numbers:
            doc["results"] = _rounded(self.numbers)
        if self.vectors:
            doc["vectors"] = _rounded(self.vectors)
        if self.tables:
            doc["tables"] = {
                name: {"columns": list(t.columns), "rows": _rounded(t.rows)}
                for name, t in self.tables.items()
            }
        if self.checks:
            doc["checks"] = [
                {"name": n, "pass": ok, "detail": d} for n, ok, d in self.checks
            ]
        if self.notes:
            doc["notes"] = list(self.notes)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.body(), indent=2, allow_nan=False) + "\n"

    def to_text(self) -> str:
        lines: List[str] = [f"== {self.command} =="]
        if self.config:
            lines.append("")
            for key, value in self.config.items():
                lines.append(f"{key:<22} {fmt(value)}")
        if self.numbers:
            lines.append("")
            for key, value in self.numbers.items():
                lines.append(f"{key:<22} {fmt(round12(value) if isinstance(value, float) else value)}")
        for name, vec in self.vectors.items():
            lines.append("")
            lines.append(f"{name}:")
            lines.append("  [" + ", ".join(f"{round12(v):.12g}" for v in vec) + "]")
        for name, table in self.tables.items():
            lines.append("")
            lines.append(f"{name}:")
            rounded = Table(
                table.columns,
                [[round12(c) if isinstance(c, float) else c for c in row] for row in table.rows],
            )
            lines.extend("  " + ln for ln in rounded.text_lines())
        if self.checks:
            lines.append("")
            for name, ok, detail in self.checks:
                mark = "PASS" if ok else "FAIL"
                suffix = f"  ({detail})" if detail else ""
                lines.append(f"{mark}  {name}{suffix}")
        for note in self.notes:
            lines.append("")
            lines.append(f"note: {note}")
        lines.append("")
        return "\n".join(lines)
