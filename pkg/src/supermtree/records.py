"""Dataset records and their JSON-Lines wire format.

One object per line::

    {"id": 3, "label": "cb", "kind": "series", "dim": 2, "values": [...]}
    {"id": 4, "label": "", "kind": "set", "values": [...]}

Series values are the row-major flattening of a ``length x dim`` array;
set values are listed in ascending order without duplicates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Union

import numpy as np

__all__ = ["Record", "DataError", "record_to_json", "record_from_json", "read_records", "write_records"]

KINDS = ("series", "set")


class DataError(ValueError):
    """Malformed dataset content."""


@dataclass
class Record:
    id: int
    label: str
    kind: str
    obj: np.ndarray

    def __post_init__(self):
        if self.kind == "set":
            self.obj = np.unique(np.asarray(self.obj, dtype=np.float64).ravel())
        elif self.kind == "series":
            arr = np.asarray(self.obj, dtype=np.float64)
            if arr.ndim == 1:
                arr = arr.reshape(-1, 1)
            self.obj = np.ascontiguousarray(arr)
        else:
            raise DataError(f"unknown record kind {self.kind!r}")

    @property
    def item(self) -> tuple[int, np.ndarray]:
        return self.id, self.obj


def record_to_json(rec: Record) -> str:
    doc = {"id": int(rec.id), "label": rec.label, "kind": rec.kind}
    if rec.kind == "series":
        doc["dim"] = int(rec.obj.shape[1])
    doc["values"] = [float(x) for x in rec.obj.ravel()]
    return json.dumps(doc)


def record_from_json(line: str) -> Record:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise DataError("record must be a JSON object")
    try:
        rid = doc["id"]
        kind = doc["kind"]
        values = doc["values"]
    except KeyError as exc:
        raise DataError(f"missing field {exc}") from None
    if not isinstance(rid, int) or isinstance(rid, bool) or rid < 0:
        raise DataError(f"id must be an unsigned integer, got {rid!r}")
    if kind not in KINDS:
        raise DataError(f"kind must be one of {KINDS}, got {kind!r}")
    if not isinstance(values, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
    ):
        raise DataError("values must be a list of numbers")
    if not all(math.isfinite(v) for v in values):
        raise DataError(f"record {rid}: non-finite value")
    label = str(doc.get("label", ""))
    arr = np.array(values, dtype=np.float64)
    if kind == "series":
        dim = doc.get("dim", 1)
        if not isinstance(dim, int) or dim < 1:
            raise DataError(f"record {rid}: dim must be a positive integer")
        if len(arr) % dim:
            raise DataError(f"record {rid}: {len(arr)} values do not fill rows of {dim}")
        arr = arr.reshape(-1, dim)
    return Record(rid, label, kind, arr)


def write_records(records: Iterable[Record], dest: Union[str, Path, IO[str]]) -> int:
    count = 0
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            return write_records(records, fh)
    for rec in records:
        dest.write(record_to_json(rec))
        dest.write("\n")
        count += 1
    return count


def read_records(src: Union[str, Path, IO[str]]) -> list[Record]:
    """Parse a JSON-Lines dataset; raises :class:`DataError` on any bad line."""
    if isinstance(src, (str, Path)):
        with open(src, encoding="utf-8") as fh:
            return read_records(fh)
    out: list[Record] = []
    seen: set[int] = set()
    kinds: set[str] = set()
    dims: set[int] = set()
    for lineno, line in enumerate(src, 1):
        if not line.strip():
            continue
        try:
            rec = record_from_json(line)
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
        if rec.id in seen:
            raise DataError(f"line {lineno}: duplicate id {rec.id}")
        seen.add(rec.id)
        kinds.add(rec.kind)
        if rec.kind == "series":
            dims.add(rec.obj.shape[1])
        if len(kinds) > 1:
            raise DataError(f"line {lineno}: mixed record kinds")
        if len(dims) > 1:
            raise DataError(f"line {lineno}: mixed series dimensionality")
        out.append(rec)
    return out
