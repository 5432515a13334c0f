"""
Result tables and run metadata
"""

import json
import math
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy

from . import settings
from .exceptions.errors import StorageError

_HEADER = re.compile(r"^(?P<name>[^\[\],]+)(\[(?P<unit>[^\[\],]*)\])?$")


@dataclass
class ResultTable:
    """
    Column-ordered table. Each column is (name, unit); rows hold ints,
    floats or comma-free strings. Equality treats NaN cells as equal.
    """

    name: str
    columns: List[Tuple[str, str]]
    rows: List[tuple] = field(default_factory=list)
    provenance: str = ""

    def add_row(self, *values):
        if len(values) != len(self.columns):
            raise StorageError(
                f"Table '{self.name}' has {len(self.columns)} columns, row has {len(values)}"
            )
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        names = [c[0] for c in self.columns]
        try:
            i = names.index(name)
        except ValueError:
            raise StorageError(f"Table '{self.name}' has no column '{name}'") from None
        return [row[i] for row in self.rows]

    def text_columns(self) -> List[str]:
        """Columns holding at least one string cell."""
        return [name for i, (name, _) in enumerate(self.columns)
                if any(isinstance(row[i], str) for row in self.rows)]

    def __eq__(self, other):
        if not isinstance(other, ResultTable):
            return NotImplemented
        if self.name != other.name or list(self.columns) != list(other.columns):
            return False
        if len(self.rows) != len(other.rows):
            return False
        return all(len(a) == len(b) and all(_same_cell(x, y) for x, y in zip(a, b))
                   for a, b in zip(self.rows, other.rows))


def _same_cell(a, b) -> bool:
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
        return True
    return a == b


@dataclass
class ResultBundle:
    experiment: str
    config_hash: str
    seed: int
    tables: List[ResultTable] = field(default_factory=list)
    notes: Dict[str, str] = field(default_factory=dict)
    started: str = ""
    finished: str = ""

    def add(self, table: ResultTable) -> ResultTable:
        self.tables.append(table)
        return table

    def table(self, name: str) -> ResultTable:
        for t in self.tables:
            if t.name == name:
                return t
        raise StorageError(f"No table named '{name}'")


def format_value(value) -> str:
    """Cell text; floats use the shortest form that reads back to the same double."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    text = str(value)
    if "," in text or "\n" in text:
        raise StorageError(f"String cell {text!r} contains a delimiter")
    return text


def parse_value(text: str, keep_text: bool = False):
    if keep_text:
        return text
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def format_table(table: ResultTable) -> str:
    header = ",".join(f"{name}[{unit}]" if unit else name for name, unit in table.columns)
    lines = [header]
    for row in table.rows:
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def parse_table(text: str, name: str = "table", text_columns: Sequence[str] = ()) -> ResultTable:
    """Inverse of format_table; cells of text_columns stay strings even when they look numeric."""
    lines = [line for line in text.splitlines() if line]
    if not lines:
        raise StorageError(f"Table '{name}' is empty")
    columns = []
    for cell in lines[0].split(","):
        match = _HEADER.match(cell)
        if not match:
            raise StorageError(f"Malformed header cell {cell!r} in table '{name}'")
        columns.append((match.group("name"), match.group("unit") or ""))
    table = ResultTable(name, columns)
    keep = [col in text_columns for col, _ in columns]
    for line in lines[1:]:
        cells = line.split(",")
        table.add_row(*(parse_value(v, i < len(keep) and keep[i]) for i, v in enumerate(cells)))
    return table


def table_filename(table: ResultTable) -> str:
    return f"{table.name}.csv"


def metadata(bundle: ResultBundle, version: Optional[str] = None) -> dict:
    """Structured metadata document for one run."""
    from . import __version__

    return {
        "schema_version": settings.SCHEMA_VERSION,
        "tool": "spinbus",
        "version": version or __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "experiment": bundle.experiment,
        "config_hash": bundle.config_hash,
        "seed": bundle.seed,
        "started": bundle.started,
        "finished": bundle.finished,
        "tables": [
            {
                "name": t.name,
                "file": table_filename(t),
                "columns": [f"{n}[{u}]" if u else n for n, u in t.columns],
                "rows": len(t.rows),
                "text_columns": t.text_columns(),
                "provenance": t.provenance,
            }
            for t in bundle.tables
        ],
        "notes": dict(bundle.notes),
    }


def write_bundle(bundle: ResultBundle, storage) -> List[str]:
    """Write every table and metadata.json through a RunStorage; returns the paths."""
    paths = [storage.write(table_filename(t), format_table(t)) for t in bundle.tables]
    paths.append(storage.write_json("metadata.json", metadata(bundle)))
    return paths


def read_table(storage, name: str, text_columns: Optional[Sequence[str]] = None) -> ResultTable:
    """
    Read one table back from a run directory.

    Without text_columns the list recorded in metadata.json is used, if any.
    """
    text = storage.read(f"{name}.csv")
    if not text:
        raise StorageError(f"Table file {storage.path(name + '.csv')} is missing or empty")
    if text_columns is None:
        text_columns = _recorded_text_columns(storage, name)
    return parse_table(text, name, text_columns)


def _recorded_text_columns(storage, name: str) -> List[str]:
    raw = storage.read("metadata.json")
    if not raw:
        return []
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise StorageError(f"Corrupt metadata in {storage.path('metadata.json')}: {e}") from e
    for entry in doc.get("tables", []):
        if entry.get("name") == name:
            return list(entry.get("text_columns", []))
    return []


