"""
Result tables - CSV, JSON and Markdown export of experiment outputs.

Every float is written with 9 significant digits so that runs with identical
numerics produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path
from typing import Any


def format_value(value: Any) -> str:
    """Cell text: floats with 9 significant digits, None as empty."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".9g")
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return format_value(value.item())
    return str(value)


@dataclass
class Table:
    """A titled table of rows.

    Attributes:
        title: Name of the table.
        columns: Column headers.
        rows: Row values, one list per row, in column order.
        notes: Free-form summary lines.
    """

    title: str
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def add(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"Row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(list(values))

    def records(self) -> list[dict[str, Any]]:
        return [dict(zip(self.columns, row)) for row in self.rows]


def _write(text: str, output_path: str | Path | None) -> None:
    if output_path:
        path = Path(output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def table_to_csv(table: Table, output_path: str | Path | None = None) -> str:
    """
    Export a table to CSV (header row, then one line per row).

    Example:
        >>> table_to_csv(table, "runs/a/stability.csv")
    """
    output = StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_value(v) for v in row])
    csv_string = output.getvalue()
    _write(csv_string, output_path)
    return csv_string


def table_to_json(table: Table, output_path: str | Path | None = None, indent: int = 2) -> str:
    data = {
        "title": table.title,
        "columns": table.columns,
        "rows": [[_jsonable(v) for v in row] for row in table.rows],
        "notes": table.notes,
    }
    json_string = json.dumps(data, indent=indent)
    _write(json_string, output_path)
    return json_string


def _jsonable(value: Any) -> Any:
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()
    if isinstance(value, float) and value != value:
        return None
    return value


def table_to_markdown(table: Table, output_path: str | Path | None = None) -> str:
    lines = [
        f"# {table.title}",
        "",
        "| " + " | ".join(table.columns) + " |",
        "|" + "|".join("---" for _ in table.columns) + "|",
    ]
    for row in table.rows:
        lines.append("| " + " | ".join(format_value(v) for v in row) + " |")
    if table.notes:
        lines.extend(["", *table.notes])
    md_string = "\n".join(lines) + "\n"
    _write(md_string, output_path)
    return md_string


def export_table(table: Table, output_path: str | Path, format: str | None = None) -> Path:
    """
    Export a table to file, auto-detecting the format from the extension.

    Args:
        table: Table to export.
        output_path: Output file path.
        format: Force format ("csv", "json", "md"). Auto-detected if None.
    """
    path = Path(output_path)
    if format is None:
        format_map = {".csv": "csv", ".json": "json", ".md": "md", ".markdown": "md"}
        format = format_map.get(path.suffix.lower(), "csv")
    if format == "json":
        table_to_json(table, path)
    elif format == "md":
        table_to_markdown(table, path)
    else:
        table_to_csv(table, path)
    return path


class CsvLog:
    """Append-only CSV with a fixed header, written row by row."""

    def __init__(self, path: str | Path, columns: Sequence[str]) -> None:
        self.path = Path(path)
        self.columns = list(columns)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("w", newline="") as f:
            csv.writer(f, lineterminator="\n").writerow(self.columns)

    def append(self, **values: Any) -> None:
        unknown = sorted(set(values) - set(self.columns))
        if unknown:
            raise ValueError(f"Unknown columns: {unknown}")
        with self.path.open("a", newline="") as f:
            csv.writer(f, lineterminator="\n").writerow([format_value(values.get(c)) for c in self.columns])


def write_json(data: Any, output_path: str | Path, indent: int = 2) -> Path:
    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=indent, sort_keys=True))
    return path
