"""CSV/JSON emission of result tables and metadata loading for replays."""

import csv
import io
import json
import logging
import math
import platform
from datetime import datetime
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from . import __version__
from .models import ResultTable

logger = logging.getLogger(__name__)

METADATA_PREFIX = "# metadata: "


class ReportFormatError(ValueError):
    """File is not a result table written by this tool."""

    pass


def _format_value(value: float) -> str:
    """Nine significant digits, the precision shared by CSV and JSON output."""
    return f"{value:.9g}"


def _json_value(value: float) -> float | None:
    if value is None or math.isnan(value):
        return None
    return float(_format_value(value))


def build_metadata(
    command: str,
    params: dict[str, Any],
    elapsed: float | None = None,
    **extra: Any,
) -> dict[str, Any]:
    """Metadata block: resolved parameters, seed, versions and wall-clock time."""
    meta = {
        "command": command,
        "params": params,
        "seed": params.get("seed"),
        "versions": {
            "asappp-sir": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "created": datetime.now().isoformat(timespec="seconds"),
    }
    if elapsed is not None:
        meta["elapsed_s"] = round(elapsed, 3)
    meta.update(extra)
    return meta


def generate_csv(table: ResultTable, output_path: Path | None = None) -> str:
    """Render a table as CSV with the metadata as a '#' comment header.

    Args:
        table: Table to render.
        output_path: Optional path to write the CSV file.

    Returns:
        The CSV text.
    """
    buffer = io.StringIO()
    buffer.write(METADATA_PREFIX + json.dumps(table.metadata, sort_keys=True) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_format_value(v) for v in row])
    text = buffer.getvalue()

    if output_path:
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", newline="", encoding="utf-8") as f:
            f.write(text)
        logger.info(f"Wrote CSV table to {output_path}")

    return text


def generate_json(table: ResultTable, output_path: Path | None = None) -> dict:
    """Render a table as one JSON object holding the metadata and the columns.

    Args:
        table: Table to render.
        output_path: Optional path to write the JSON file.

    Returns:
        The JSON-ready dictionary.
    """
    data = {
        "metadata": table.metadata,
        "columns": {
            name: [_json_value(row[j]) for row in table.rows]
            for j, name in enumerate(table.columns)
        },
    }

    if output_path:
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2)
        logger.info(f"Wrote JSON table to {output_path}")

    return data


def write_table(table: ResultTable, output_path: Path | None, fmt: str = "csv") -> str:
    """Write a table in the requested format and return its text."""
    if fmt == "json":
        return json.dumps(generate_json(table, output_path), indent=2)
    return generate_csv(table, output_path)


def load_table(path: Path) -> ResultTable:
    """Read a table written by generate_csv or generate_json."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ReportFormatError(f"Cannot read {path}: {e}") from e

    if path.suffix == ".json" or text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
            columns = list(data["columns"])
            values = [data["columns"][c] for c in columns]
            rows = [
                [math.nan if v is None else float(v) for v in row]
                for row in zip(*values, strict=True)
            ]
            return ResultTable(columns, rows, data["metadata"])
        except (ValueError, KeyError, TypeError) as e:
            raise ReportFormatError(f"{path} is not a result table: {e}") from e

    lines = text.splitlines()
    if not lines or not lines[0].startswith(METADATA_PREFIX):
        raise ReportFormatError(f"{path} has no metadata header")
    try:
        metadata = json.loads(lines[0][len(METADATA_PREFIX) :])
        reader = csv.reader(lines[1:])
        columns = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    except (ValueError, StopIteration) as e:
        raise ReportFormatError(f"{path} is not a result table: {e}") from e
    return ResultTable(columns, rows, metadata)


def load_metadata(path: Path) -> dict[str, Any]:
    """Metadata block of a written table, used to replay the run."""
    metadata = load_table(path).metadata
    if "command" not in metadata or "params" not in metadata:
        raise ReportFormatError(f"{path} metadata lacks the command or its parameters")
    return metadata
