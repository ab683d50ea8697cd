"""Delimited-text traces, sweep tables and JSON run summaries."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .harness import COLUMNS, TraceRecord


def _cell(value):
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        return repr(value)
    return value


def write_trace(path, trace: list[TraceRecord]) -> Path:
    """One row per stance, columns in ``COLUMNS`` order, header names carry units."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([h for _, h in COLUMNS])
        for rec in trace:
            w.writerow([_cell(getattr(rec, a)) for a, _ in COLUMNS])
    return path


def read_trace(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def write_table(path, header: list[str], rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(float(x)) for x in row])
    return path


def write_trajectory(path, samples: list[tuple[int, np.ndarray]]) -> Path:
    """COM samples ``(stance, t_s, x_m, y_m)``; ``t_s`` is time since touchdown."""
    rows = [(i, *row) for i, traj in samples for row in traj]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stance", "t_s", "x_m", "y_m"])
        for i, t, x, y in rows:
            w.writerow([i, repr(float(t)), repr(float(x)), repr(float(y))])
    return Path(path)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_summary(path, summary: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(summary), indent=2) + "\n")
    return path
