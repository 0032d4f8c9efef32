"""Tests for odesr.export.tables module."""

import json

import numpy as np
import pytest

from odesr.export.tables import (
    CsvLog,
    Table,
    export_table,
    format_value,
    table_to_csv,
    table_to_json,
    table_to_markdown,
    write_json,
)


@pytest.fixture
def table():
    t = Table("Stability", ["lambda", "method", "diverged", "rel_error"], notes=["boundary: 50"])
    t.add(20.0, "adjoint", False, 1.0 / 3.0)
    t.add(50, "discrete", True, None)
    return t


class TestFormatValue:
    """Tests for format_value."""

    @pytest.mark.parametrize(
        "value,expected",
        [
            (1.0 / 3.0, "0.333333333"),
            (1e-10, "1e-10"),
            (2.0, "2"),
            (None, ""),
            (True, "true"),
            (False, "false"),
            (7, "7"),
            ("x", "x"),
            (np.float32(0.5), "0.5"),
            (np.int64(3), "3"),
        ],
    )
    def test_values(self, value, expected):
        """Test cell text."""
        assert format_value(value) == expected


class TestTable:
    """Tests for Table."""

    def test_add_checks_width(self, table):
        """Test that rows must match the header."""
        with pytest.raises(ValueError):
            table.add(1.0)

    def test_records(self, table):
        """Test dict records."""
        assert table.records()[1] == {"lambda": 50, "method": "discrete", "diverged": True, "rel_error": None}


class TestExport:
    """Tests for CSV, JSON and Markdown export."""

    def test_csv(self, table):
        """Test the CSV text."""
        assert table_to_csv(table) == (
            "lambda,method,diverged,rel_error\n20,adjoint,false,0.333333333\n50,discrete,true,\n"
        )

    def test_json(self, table):
        """Test the JSON document, NaN as null."""
        table.add(float("nan"), "checkpointed", False, np.float64("nan"))
        data = json.loads(table_to_json(table))
        assert data["title"] == "Stability"
        assert data["rows"][2] == [None, "checkpointed", False, None]
        assert data["notes"] == ["boundary: 50"]

    def test_markdown(self, table):
        """Test the pipe table with title and notes."""
        lines = table_to_markdown(table).splitlines()
        assert lines[0] == "# Stability"
        assert lines[2] == "| lambda | method | diverged | rel_error |"
        assert lines[3] == "|---|---|---|---|"
        assert lines[4] == "| 20 | adjoint | false | 0.333333333 |"
        assert lines[-1] == "boundary: 50"

    @pytest.mark.parametrize(
        "name,check",
        [
            ("t.csv", lambda text: text.startswith("lambda,")),
            ("t.json", lambda text: json.loads(text)["columns"][0] == "lambda"),
            ("t.md", lambda text: text.startswith("# Stability")),
            ("t.markdown", lambda text: text.startswith("# Stability")),
            ("t.txt", lambda text: text.startswith("lambda,")),
        ],
    )
    def test_export_by_suffix(self, tmp_path, table, name, check):
        """Test format detection from the extension."""
        path = export_table(table, tmp_path / "sub" / name)
        assert check(path.read_text())

    def test_forced_format(self, tmp_path, table):
        """Test an explicit format overrides the suffix."""
        path = export_table(table, tmp_path / "t.csv", format="json")
        assert json.loads(path.read_text())["title"] == "Stability"


class TestCsvLog:
    """Tests for CsvLog and write_json."""

    def test_append_rows(self, tmp_path):
        """Test header plus appended rows with missing cells empty."""
        log = CsvLog(tmp_path / "metrics.csv", ["epoch", "loss", "psnr"])
        log.append(epoch=0, psnr=21.5)
        log.append(epoch=1, loss=0.25, psnr=22.0)
        assert (tmp_path / "metrics.csv").read_text() == "epoch,loss,psnr\n0,,21.5\n1,0.25,22\n"

    def test_unknown_column(self, tmp_path):
        """Test that unknown keys are rejected."""
        log = CsvLog(tmp_path / "m.csv", ["a"])
        with pytest.raises(ValueError):
            log.append(b=1)

    def test_reopen_truncates(self, tmp_path):
        """Test that a new log starts with only its header."""
        path = tmp_path / "m.csv"
        CsvLog(path, ["a"]).append(a=1)
        CsvLog(path, ["a"])
        assert path.read_text() == "a\n"

    def test_write_json_sorted(self, tmp_path):
        """Test sorted keys."""
        path = write_json({"b": 1, "a": 2}, tmp_path / "x.json")
        assert list(json.loads(path.read_text())) == ["a", "b"]
