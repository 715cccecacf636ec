"""Bit-exact binary snapshot format.

Layout, all integers little-endian u32 and floats little-endian f64:

    magic bytes  b"NEMF1\\n"
    dim
    n per axis (dim values)
    field_count
    per field: name_length, UTF-8 name bytes, components
    per field: data, component-major, row-major (last axis fastest)

The writer and reader round-trip byte for byte.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"NEMF1\n"


class SnapshotFormatError(ValueError):
    """The file is not a well-formed snapshot."""


@dataclass(frozen=True)
class SnapshotHeader:
    dim: int
    shape: tuple[int, ...]
    fields: tuple[tuple[str, int], ...]  # (name, components)


def write_snapshot(path: str | Path, shape: tuple[int, ...],
                   fields: dict[str, np.ndarray]) -> None:
    """Write named sample arrays of shape (components, *shape)."""
    dim = len(shape)
    chunks = [MAGIC, struct.pack("<I", dim)]
    chunks.extend(struct.pack("<I", n) for n in shape)
    chunks.append(struct.pack("<I", len(fields)))
    for name, values in fields.items():
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", values.shape[0]))
    for name, values in fields.items():
        if values.shape[1:] != shape:
            raise ValueError(f"field {name!r} shape {values.shape} does not match {shape}")
        chunks.append(np.ascontiguousarray(values, dtype="<f8").tobytes(order="C"))
    Path(path).write_bytes(b"".join(chunks))


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise SnapshotFormatError("snapshot truncated")
        out = self.data[self.pos:self.pos + count]
        self.pos += count
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def read_header(path: str | Path) -> SnapshotHeader:
    cur = _Cursor(Path(path).read_bytes())
    if cur.take(len(MAGIC)) != MAGIC:
        raise SnapshotFormatError("bad magic bytes; not a snapshot file")
    dim = cur.u32()
    if dim not in (2, 3):
        raise SnapshotFormatError(f"unsupported dim {dim}")
    shape = tuple(cur.u32() for _ in range(dim))
    count = cur.u32()
    fields = []
    for _ in range(count):
        name_len = cur.u32()
        name = cur.take(name_len).decode("utf-8")
        comps = cur.u32()
        fields.append((name, comps))
    return SnapshotHeader(dim, shape, tuple(fields))


def read_snapshot(path: str | Path) -> tuple[SnapshotHeader, dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    cur = _Cursor(data)
    if cur.take(len(MAGIC)) != MAGIC:
        raise SnapshotFormatError("bad magic bytes; not a snapshot file")
    dim = cur.u32()
    if dim not in (2, 3):
        raise SnapshotFormatError(f"unsupported dim {dim}")
    shape = tuple(cur.u32() for _ in range(dim))
    count = cur.u32()
    header_fields = []
    for _ in range(count):
        name_len = cur.u32()
        name = cur.take(name_len).decode("utf-8")
        comps = cur.u32()
        header_fields.append((name, comps))
    npts = int(np.prod(shape))
    fields = {}
    for name, comps in header_fields:
        raw = cur.take(8 * comps * npts)
        fields[name] = np.frombuffer(raw, dtype="<f8").reshape(comps, *shape).copy()
    if cur.pos != len(data):
        raise SnapshotFormatError("trailing bytes after snapshot payload")
    return SnapshotHeader(dim, shape, tuple(header_fields)), fields
