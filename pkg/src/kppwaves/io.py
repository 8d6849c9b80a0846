"""CSV and JSON output with exact float round-trips.

CSV values are written with 17 significant digits, which reproduces every
IEEE double exactly. JSON uses Python's shortest round-trip representation
(also exact); non-finite values become the strings ``"inf"``, ``"-inf"``
and ``"nan"``.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from pathlib import Path

import numpy as np


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path, header, columns) -> Path:
    """Write equal-length ``columns`` under ``header`` (a sequence of names)."""
    path = Path(path)
    columns = [np.asarray(c, dtype=float) for c in columns]
    if len({len(c) for c in columns}) > 1:
        raise ValueError("columns must have equal length")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([format_float(v) for v in row])
    return path


def read_csv(path) -> tuple[list, np.ndarray]:
    """Return the header and a 2-D float array (one row per record)."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in row] for row in body], dtype=float)
    return header, data.reshape(len(body), len(header))


def jsonable(obj):
    """Recursively convert numpy scalars/arrays, enums and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj) + "\n")
    return path


def sidecar(path, suffix=".json") -> Path:
    """Path of the metadata file that accompanies ``path``."""
    path = Path(path)
    return path.with_name(path.stem + suffix)
