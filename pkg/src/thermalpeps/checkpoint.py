"""Binary state containers: named tensor records plus a JSON parameter block.

Each tensor is stored in the flat record format of :mod:`thermalpeps.tensors`
(rank and dims as unsigned 64-bit little-endian integers, then float64 values
in C order), preceded by a length-prefixed UTF-8 name.  Rewriting the same
state produces byte-identical files.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .tensors import read_record, write_record

MAGIC = b"TPCK"
VERSION = 1

_U64 = struct.Struct("<Q")
_U32 = struct.Struct("<I")


def save_state(path: str | Path, params: dict, arrays: dict[str, np.ndarray]) -> None:
    """Write a parameter dict and named tensors to ``path``."""
    blob = json.dumps(params, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_U32.pack(VERSION))
        fh.write(_U64.pack(len(blob)))
        fh.write(blob)
        fh.write(_U64.pack(len(arrays)))
        for name in sorted(arrays):
            nb = name.encode("utf-8")
            fh.write(_U64.pack(len(nb)))
            fh.write(nb)
            write_record(fh, arrays[name])


def load_state(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read a state container written by :func:`save_state`."""
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path}: not a state container")
        (version,) = _U32.unpack(fh.read(_U32.size))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported container version {version}")
        (blen,) = _U64.unpack(fh.read(_U64.size))
        params = json.loads(fh.read(blen).decode("utf-8"))
        (count,) = _U64.unpack(fh.read(_U64.size))
        arrays = {}
        for _ in range(count):
            (nlen,) = _U64.unpack(fh.read(_U64.size))
            name = fh.read(nlen).decode("utf-8")
            arrays[name] = read_record(fh)
    return params, arrays
