"""Unit tests for export utilities.

Tests cover:
- CSV export with and without headers
- JSON export of numpy values and rejection of non-finite floats
- The per-battle equilibrium table
- Writing exports to disk
"""

import json

import numpy as np
import polars as pl
import pytest

from src.components.exports import (
    EQUILIBRIUM_COLUMNS,
    ExportError,
    equilibrium_table,
    export_to_csv,
    export_to_json,
    write_bytes,
)
from src.contest.equilibrium import solve


class TestExportToCSV:
    """Tests for export_to_csv function."""

    def test_csv_with_header(self):
        """Test CSV output starts with the column names."""
        df = pl.DataFrame({"k": [0.5, 1.0], "e_star": [0.1, 0.2]})
        lines = export_to_csv(df).decode("utf-8").splitlines()
        assert lines == ["k,e_star", "0.5,0.1", "1.0,0.2"]

    def test_csv_without_header(self):
        """Test the header can be left out."""
        df = pl.DataFrame({"k": [2.0]})
        assert export_to_csv(df, include_header=False) == b"2.0\n"


class TestExportToJSON:
    """Tests for export_to_json function."""

    def test_pretty_and_newline_terminated(self):
        """Test the default output is indented and ends with a newline."""
        data = export_to_json({"passed": True})
        assert data == b'{\n  "passed": true\n}\n'

    def test_compact(self):
        """Test pretty=False writes a single line."""
        assert export_to_json({"a": [1, 2]}, pretty=False) == b'{"a": [1, 2]}\n'

    def test_numpy_values(self):
        """Test numpy scalars, arrays and tuples are converted."""
        data = {
            "array": np.array([0.25, 0.5]),
            "float": np.float64(0.1),
            "int": np.int64(3),
            "flag": np.bool_(True),
            "pair": (1, 2),
        }
        loaded = json.loads(export_to_json(data))
        assert loaded == {
            "array": [0.25, 0.5],
            "float": 0.1,
            "int": 3,
            "flag": True,
            "pair": [1, 2],
        }

    def test_floats_round_trip(self):
        """Test floats read back bit-identical."""
        value = 11 / 15
        assert json.loads(export_to_json({"p": value}))["p"] == value

    @pytest.mark.parametrize("value", [float("nan"), float("inf")])
    def test_non_finite_rejected(self, value):
        """Test NaN and infinities raise ExportError."""
        with pytest.raises(ExportError) as exc:
            export_to_json({"residual": value})
        assert exc.value.export_format == "json"

    def test_unknown_type_rejected(self):
        """Test objects without a JSON form raise ExportError."""
        with pytest.raises(ExportError, match="not JSON serializable"):
            export_to_json({"obj": object()})


class TestEquilibriumTable:
    """Tests for equilibrium_table function."""

    def test_columns_and_numbering(self, worked_example):
        """Test column order and 1-based battle numbers."""
        table = equilibrium_table(solve(worked_example), worked_example)
        assert tuple(table.columns) == EQUILIBRIUM_COLUMNS
        assert table["t"].to_list() == [1, 2, 3]

    def test_values(self, worked_example):
        """Test the table repeats the equilibrium record."""
        eq = solve(worked_example)
        table = equilibrium_table(eq, worked_example)
        assert table["p_star_a"].to_list() == list(eq.prob_a)
        assert table["v_star_b"].to_list() == list(eq.alloc_b.shares)
        assert table["c_t"].to_list() == pytest.approx([1.0, 4.0, 2.0], rel=1e-14)

    def test_csv_header(self, worked_example):
        """Test the exported header line."""
        table = equilibrium_table(solve(worked_example), worked_example)
        header = export_to_csv(table).decode("utf-8").splitlines()[0]
        assert header == ",".join(EQUILIBRIUM_COLUMNS)


class TestWriteBytes:
    """Tests for write_bytes function."""

    def test_creates_parent_directories(self, tmp_path):
        """Test missing parent directories are created."""
        target = write_bytes(b"x\n", tmp_path / "out" / "nested" / "table.csv")
        assert target.read_bytes() == b"x\n"

    def test_os_error_wrapped(self, tmp_path):
        """Test a path below a regular file raises ExportError."""
        blocker = tmp_path / "file.txt"
        blocker.write_text("", encoding="utf-8")
        with pytest.raises(ExportError, match="Failed to write") as exc:
            write_bytes(b"x", blocker / "table.csv")
        assert exc.value.export_format == "csv"
