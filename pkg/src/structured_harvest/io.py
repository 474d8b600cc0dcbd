"""CSV and JSON writers with fixed headers and 17-significant-digit floats."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path, header, columns) -> Path:
    """Write equal-length columns under a fixed header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = [list(c) for c in columns]
    n = len(columns[0]) if columns else 0
    if any(len(c) != n for c in columns) or len(columns) != len(header):
        raise ValueError("column count or lengths do not match the header")
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_rows(path, header, rows) -> Path:
    return write_csv(path, header, list(zip(*rows)) if rows else [[] for _ in header])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if not math.isfinite(v) else float(format(v, ".17g"))
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(payload), indent=2) + "\n")
    return path


def read_csv(path) -> dict:
    """Read one of our CSV files back into named float columns."""
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    cols = {h: [] for h in header}
    for line in lines[1:]:
        for h, v in zip(header, line.split(",")):
            if v in ("true", "false"):
                cols[h].append(v == "true")
            else:
                cols[h].append(float(v) if v else float("nan"))
    return {h: np.array(v) for h, v in cols.items()}
