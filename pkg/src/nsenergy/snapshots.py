"""Binary snapshot format for velocity fields (NSEF).

Layout: magic bytes "NSEF", version u32 = 1, n u32, time f64,
viscosity f64, then the three velocity components as little-endian
f64 real-space samples in x-fastest order.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Union

import numpy as np

from .spectral import FourierField, Grid

MAGIC = b"NSEF"
VERSION = 1
_HEADER = struct.Struct("<4sIIdd")

__all__ = ["SnapshotFormatError", "write_snapshot", "read_snapshot", "MAGIC", "VERSION"]


class SnapshotFormatError(ValueError):
    pass


def write_snapshot(path: Union[str, Path], field: FourierField,
                   time: float, viscosity: float) -> None:
    n = field.grid.n
    samples = field.to_real().components
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, float(time), float(viscosity)))
        for comp in samples:
            # x-fastest: first index varies fastest on disk
            fh.write(np.asarray(comp, dtype="<f8").ravel(order="F").tobytes())


def read_snapshot(path: Union[str, Path]) -> tuple[FourierField, float, float]:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header")
    magic, version, n, time, viscosity = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic bytes {magic!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 3 * n**3 * 8
    if len(raw) != expected:
        raise SnapshotFormatError(
            f"{path}: size {len(raw)} != expected {expected} for n={n}"
        )
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    comps = np.empty((3, n, n, n))
    for i in range(3):
        comps[i] = data[i * n**3:(i + 1) * n**3].reshape((n, n, n), order="F")
    grid = Grid(n)
    return FourierField.from_real(comps, grid), time, viscosity
