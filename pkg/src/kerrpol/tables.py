"""Deterministic tabular output: CSV with a #-metadata header, JSON mirror.

Floats are rendered with ``repr`` (shortest round-trip form) and the
metadata never includes timestamps, so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ValidationError


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    if hasattr(value, "item"):          # numpy scalar
        value = value.item()
        return format_value(value)
    if isinstance(value, float):
        return repr(value)
    raise ValidationError(f"cannot format value of type {type(value)!r}")


def _json_value(value):
    if hasattr(value, "item"):
        value = value.item()
    return value


@dataclass
class OutputTable:
    """Rectangular numeric table with per-column units and metadata."""

    name: str
    columns: list[str]
    units: list[str]
    rows: list[tuple] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.columns) != len(self.units):
            raise ValidationError("every column needs a declared unit")
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise ValidationError(
                    f"row {i} has {len(row)} fields, expected "
                    f"{len(self.columns)}")

    def to_csv_text(self) -> str:
        lines = [f"# table: {self.name}"]
        for key, value in self.meta.items():
            lines.append(f"# {key}: {format_value(value)}")
        lines.append("# units: " + ",".join(self.units))
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(format_value(v) for v in row))
        return "\n".join(lines) + "\n"

    def to_json_text(self) -> str:
        payload = {
            "table": self.name,
            "meta": {k: _json_value(v) for k, v in self.meta.items()},
            "columns": list(self.columns),
            "units": list(self.units),
            "rows": [[_json_value(v) for v in row] for row in self.rows],
        }
        return json.dumps(payload, indent=2) + "\n"

    def write(self, directory, fmt: str) -> str:
        """Write under ``directory`` as <name>.<fmt>; returns the path."""
        import os

        if fmt not in ("csv", "json"):
            raise ValidationError(f"unknown output format {fmt!r}")
        os.makedirs(directory, exist_ok=True)
        path = os.path.join(directory, f"{self.name}.{fmt}")
        text = self.to_csv_text() if fmt == "csv" else self.to_json_text()
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        return path
