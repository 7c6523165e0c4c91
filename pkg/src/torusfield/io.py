"""CSV/JSON serialization with atomic writes.

Field CSV layout::

    # torus-field v1, d=<d>, n=<n>, seed=<seed>, measure=<name>
    <value>
    ...

one value per line in row-major order, each printed with ``repr`` so floats
round-trip exactly.  Every field file has a JSON sidecar with the provenance.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .sampler import GridField

FIELD_MAGIC = "# torus-field v1"


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps_json(obj) -> str:
    """Canonical JSON: sorted keys, fixed indent, non-finite floats as strings."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    atomic_write_text(path, dumps_json(obj))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def _measure_name(field: GridField) -> str:
    m = field.provenance.get("measure", {})
    return str(m.get("measure", "unknown")) if isinstance(m, dict) else str(m)


def field_to_csv(field: GridField) -> str:
    seed = field.provenance.get("seed", "")
    lines = [f"{FIELD_MAGIC}, d={field.dim}, n={field.n}, seed={seed}, "
             f"measure={_measure_name(field)}"]
    lines.extend(repr(float(v)) for v in field.values)
    return "\n".join(lines) + "\n"


def write_field(path, field: GridField, extra: dict | None = None) -> Path:
    """Write the CSV and its JSON sidecar; returns the sidecar path."""
    atomic_write_text(path, field_to_csv(field))
    side = sidecar_path(path)
    meta = {"dim": field.dim, "n": field.n, "provenance": field.provenance}
    if extra:
        meta.update(extra)
    write_json(side, meta)
    return side


def _parse_header(line: str) -> dict:
    if not line.startswith(FIELD_MAGIC):
        raise ValueError("not a torus-field v1 CSV")
    out = {}
    for part in line[len(FIELD_MAGIC):].split(","):
        part = part.strip()
        if "=" in part:
            key, val = part.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def read_field(path) -> GridField:
    with open(path, encoding="utf-8") as fh:
        header = _parse_header(fh.readline().rstrip("\n"))
        vals = np.array([float(line) for line in fh if line.strip()], dtype=np.float64)
    d, n = int(header["d"]), int(header["n"])
    if vals.size != n**d:
        raise ValueError(f"expected {n**d} values, found {vals.size}")
    prov = {}
    side = sidecar_path(path)
    if side.exists():
        prov = read_json(side).get("provenance", {})
    else:
        prov = {"seed": int(header["seed"]) if header.get("seed") else None,
                "measure": {"measure": header.get("measure")}}
    vals.setflags(write=False)
    return GridField(dim=d, n=n, values=vals, provenance=prov)


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def table_to_csv(columns, rows, comments=()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_table(path, columns, rows, comments=()) -> None:
    atomic_write_text(path, table_to_csv(columns, rows, comments))


def read_table(path):
    """Returns ``(comments, columns, rows)`` with numeric cells parsed as floats."""
    comments, body = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                comments.append(line[1:].strip())
            else:
                body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    rows = []
    for raw in reader:
        row = []
        for cell in raw:
            try:
                row.append(float(cell))
            except ValueError:
                row.append(cell)
        rows.append(row)
    return comments, columns, rows
