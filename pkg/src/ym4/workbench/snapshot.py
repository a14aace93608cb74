"""Binary field snapshot format.

Layout (little endian):
  magic "YMF1" (4 bytes) | version u16 | group id u16 | n u32 | h f64 |
  kind u8 | component count u8 | time f64 | CRC32 of the preceding bytes u32
followed by the payload: f64 array, site-major with index order
(x4 slowest, x3, x2, x1, form index, algebra index).
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from ..algebra import LieGroupSpec, abelian, su2
from ..grid import Grid4

MAGIC = b"YMF1"
VERSION = 1

KIND_CONNECTION = 0
KIND_CURVATURE = 1
KIND_WAVE_STATE = 2
KIND_ELECTRIC = 3
KIND_SCALARSET = 4

GROUP_SU2 = 0
GROUP_ABELIAN3 = 1

_HEADER = struct.Struct("<4sHHIdBBd")


class SnapshotError(ValueError):
    pass


def group_id(spec: LieGroupSpec) -> int:
    if spec.is_su2:
        return GROUP_SU2
    if spec.dim == 3 and not np.any(spec.structure_constants):
        return GROUP_ABELIAN3
    raise SnapshotError(f"no snapshot group id registered for {spec.name!r}")


def group_from_id(gid: int) -> LieGroupSpec:
    if gid == GROUP_SU2:
        return su2()
    if gid == GROUP_ABELIAN3:
        return abelian(3)
    raise SnapshotError(f"unknown group id {gid}")


@dataclass
class SnapshotHeader:
    group: int
    n: int
    h: float
    kind: int
    components: int
    time: float


def write_snapshot(path, arr: np.ndarray, grid: Grid4, spec: LieGroupSpec, kind: int, time: float = 0.0) -> None:
    """arr: (components, n, n, n, n, d); written with the form index moved
    inside the spatial indices per the declared payload order."""
    if arr.ndim != 6 or arr.shape[1:5] != grid.shape or arr.shape[5] != spec.dim:
        raise SnapshotError(f"unexpected field shape {arr.shape}")
    comps = arr.shape[0]
    head = _HEADER.pack(MAGIC, VERSION, group_id(spec), grid.n, grid.h, kind, comps, time)
    crc = zlib.crc32(head) & 0xFFFFFFFF
    payload = np.ascontiguousarray(np.moveaxis(arr, 0, 4), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(struct.pack("<I", crc))
        fh.write(payload.tobytes())


def read_snapshot(path):
    """Returns (SnapshotHeader, array of shape (components, n,n,n,n, d))."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise SnapshotError("truncated header")
        magic, version, gid, n, h, kind, comps, time = _HEADER.unpack(head)
        if magic != MAGIC:
            raise SnapshotError(f"bad magic {magic!r}")
        if version != VERSION:
            raise SnapshotError(f"unsupported version {version}")
        (crc,) = struct.unpack("<I", fh.read(4))
        if crc != (zlib.crc32(head) & 0xFFFFFFFF):
            raise SnapshotError("header checksum mismatch")
        spec = group_from_id(gid)
        count = n**4 * comps * spec.dim
        raw = fh.read(count * 8)
        if len(raw) != count * 8:
            raise SnapshotError("truncated payload")
    data = np.frombuffer(raw, dtype="<f8").reshape((n, n, n, n, comps, spec.dim))
    arr = np.ascontiguousarray(np.moveaxis(data, 4, 0)).astype(float)
    return SnapshotHeader(gid, n, h, kind, comps, time), arr
