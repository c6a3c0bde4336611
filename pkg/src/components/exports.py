"""Report and table export utilities.

This module turns solver results into bytes ready for stdout or a file.

Export Formats:
- CSV: per-battle equilibrium tables and sweep tables (polars)
- JSON: equilibrium records and verification/certificate reports

Floats are written in Python's shortest round-trip form, so every float64
read back from a JSON export is bit-identical to the one written.

Example:
    >>> from src.contest.equilibrium import solve
    >>> from src.contest.presets import worked_example_spec
    >>> spec = worked_example_spec()
    >>> table = equilibrium_table(solve(spec), spec)
    >>> export_to_csv(table).splitlines()[0].split(b",")[:4]
    [b't', b'c_t', b'p_star_a', b'pivotality']
"""

import json
from collections.abc import Mapping
from io import StringIO
from pathlib import Path
from typing import Any

import numpy as np
import polars as pl

from src.contest.domain import ContestSpec, Equilibrium
from src.contest.equilibrium import battle_efforts

EQUILIBRIUM_COLUMNS = (
    "t",
    "c_t",
    "p_star_a",
    "pivotality",
    "responsiveness",
    "salience",
    "v_star_a",
    "v_star_b",
    "effort_a",
    "effort_b",
)


class ExportError(Exception):
    """Exception raised for export operation errors.

    Attributes:
        message: Explanation of the error
        export_format: Format that failed
    """

    def __init__(self, message: str, export_format: str | None = None) -> None:
        self.message = message
        self.export_format = export_format
        super().__init__(self.message)


def export_to_csv(df: pl.DataFrame, include_header: bool = True) -> bytes:
    """Export DataFrame to CSV format.

    Args:
        df: DataFrame to export
        include_header: Include column headers (default: True)

    Returns:
        CSV data as bytes

    Raises:
        ExportError: If CSV export fails
    """
    try:
        buffer = StringIO()
        df.write_csv(buffer, include_header=include_header)
        return buffer.getvalue().encode("utf-8")
    except Exception as e:
        msg = f"Failed to export to CSV: {e}"
        raise ExportError(msg, export_format="csv") from e


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, tuple):
        return list(obj)
    msg = f"Object of type {type(obj).__name__} is not JSON serializable"
    raise TypeError(msg)


def export_to_json(data: Mapping[str, Any], pretty: bool = True) -> bytes:
    """Export a mapping to JSON.

    NaN and infinities are rejected rather than written as non-standard
    tokens.

    Args:
        data: JSON-compatible mapping; numpy scalars and arrays are converted
        pretty: Indent with two spaces (default: True)

    Returns:
        JSON data as bytes, newline-terminated

    Raises:
        ExportError: If the data cannot be serialized
    """
    try:
        text = json.dumps(
            data,
            indent=2 if pretty else None,
            allow_nan=False,
            default=_json_default,
        )
    except (TypeError, ValueError) as e:
        msg = f"Failed to export to JSON: {e}"
        raise ExportError(msg, export_format="json") from e
    return (text + "\n").encode("utf-8")


def equilibrium_table(eq: Equilibrium, spec: ContestSpec) -> pl.DataFrame:
    """Per-battle equilibrium table, battles numbered from 1."""
    efforts_a, efforts_b = battle_efforts(eq, spec)
    return pl.DataFrame(
        {
            "t": list(range(1, eq.n_battles + 1)),
            "c_t": list(eq.cost_index),
            "p_star_a": list(eq.prob_a),
            "pivotality": list(eq.pivotality),
            "responsiveness": list(eq.responsiveness),
            "salience": list(eq.salience),
            "v_star_a": list(eq.alloc_a.shares),
            "v_star_b": list(eq.alloc_b.shares),
            "effort_a": efforts_a.tolist(),
            "effort_b": efforts_b.tolist(),
        }
    ).select(EQUILIBRIUM_COLUMNS)


def write_bytes(data: bytes, path: str | Path) -> Path:
    """Write exported bytes to a file, creating parent directories.

    Raises:
        ExportError: If the file cannot be written
    """
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)
    except OSError as e:
        msg = f"Failed to write {target}: {e}"
        raise ExportError(msg, export_format=target.suffix.lstrip(".") or None) from e
    return target
