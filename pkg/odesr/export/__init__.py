"""Export of result tables (CSV, JSON, Markdown)."""

from .tables import CsvLog, Table, export_table, format_value, table_to_csv, table_to_json, table_to_markdown, write_json

__all__ = [
    "CsvLog",
    "Table",
    "export_table",
    "format_value",
    "table_to_csv",
    "table_to_json",
    "table_to_markdown",
    "write_json",
]
