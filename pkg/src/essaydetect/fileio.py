"""Shared file helpers: line-delimited JSON, JSON, and CSV with embedded metadata.

Conventions (all files UTF-8, deterministic bytes for fixed inputs):

- JSONL files may start with one ``{"_meta": {...}}`` line; readers skip it.
- JSON files carry a top-level ``"meta"`` key.
- CSV files may start with one ``# {json}`` comment line.

Every metadata block records the toolkit version, the seed, and an echo of
the parameters that produced the artifact.
"""

import json
from pathlib import Path

from . import __version__
from .errors import DataFormatError


def make_meta(seed=None, params=None) -> dict:
    meta = {"version": __version__}
    if seed is not None:
        meta["seed"] = int(seed)
    if params:
        meta["params"] = params
    return meta


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def write_jsonl(path, records, meta=None) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(dumps({"_meta": meta}) + "\n")
        for rec in records:
            fh.write(dumps(rec) + "\n")


def read_jsonl(path):
    """Return (records, meta). Raises DataFormatError with the 1-based line number."""
    path = Path(path)
    records, meta = [], None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}: line {lineno}: not valid JSON ({exc.msg})") from exc
            if lineno == 1 and isinstance(obj, dict) and set(obj) == {"_meta"}:
                meta = obj["_meta"]
                continue
            records.append((lineno, obj))
    return records, meta


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not valid JSON ({exc.msg})") from exc


def write_csv(path, header, rows, meta=None) -> None:
    """Plain comma-separated table; floats serialized with repr (full precision)."""
    lines = []
    if meta is not None:
        lines.append("# " + dumps(meta))
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_csv(path):
    """Return (header, rows, meta); cells stay strings."""
    path = Path(path)
    meta = None
    lines = path.read_text(encoding="utf-8").splitlines()
    if lines and lines[0].startswith("# "):
        try:
            meta = json.loads(lines[0][2:])
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: bad metadata comment ({exc.msg})") from exc
        lines = lines[1:]
    if not lines:
        raise DataFormatError(f"{path}: empty table")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:] if line]
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataFormatError(f"{path}: row {i + 1} has {len(row)} cells, expected {len(header)}")
    return header, rows, meta
