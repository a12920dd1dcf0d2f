"""Binary checkpoints for :class:`~mandelbrot_area.engine.BetaTable`.

Layout (little-endian throughout)::

    b"MSB1"  uint32 version  uint8 mode  uint64 m_done
    uint32 row_count  uint64 row_length[row_count]
    values, row by row
        float: IEEE-754 binary64
        exact: uint64 byte_length, uint8 sign, magnitude bytes, uint64 exponent
    uint64 checksum   (blake2b-64 of everything before it)

Only completed columns are written, so a checkpoint always sits on a batch
boundary.
"""

from __future__ import annotations

import hashlib
import io
import os
import struct

import numpy as np

from .arith import DyadicRational
from .engine import EXACT, FLOAT, BetaTable, deepest_row, row_start

MAGIC = b"MSB1"
VERSION = 1
_MODE_CODES = {FLOAT: 0, EXACT: 1}
_MODE_NAMES = {v: k for k, v in _MODE_CODES.items()}


class CheckpointError(Exception):
    pass


class CorruptCheckpointError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class ModeMismatchError(CheckpointError):
    pass


def _digest(payload: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def encode(table: BetaTable) -> bytes:
    m_done = table.m_done
    nrows = deepest_row(m_done) + 1 if m_done else 0
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<IBQI", VERSION, _MODE_CODES[table.mode], m_done, nrows))
    rows = [table.row(n) for n in range(nrows)]
    for r in rows:
        out.write(struct.pack("<Q", len(r)))
    for r in rows:
        if table.mode == FLOAT:
            out.write(np.asarray(r, dtype="<f8").tobytes())
        else:
            for v in r:
                mag = abs(v.numerator)
                raw = mag.to_bytes((mag.bit_length() + 7) // 8, "little")
                out.write(struct.pack("<QB", len(raw), 1 if v.numerator < 0 else 0))
                out.write(raw)
                out.write(struct.pack("<Q", v.exponent))
    payload = out.getvalue()
    return payload + struct.pack("<Q", _digest(payload))


def decode(blob: bytes, mode: str | None = None, **table_kwargs) -> BetaTable:
    if len(blob) < 4 + 17 + 8 or blob[:4] != MAGIC:
        raise CorruptCheckpointError("not a checkpoint file")
    payload, (checksum,) = blob[:-8], struct.unpack("<Q", blob[-8:])
    if _digest(payload) != checksum:
        raise CorruptCheckpointError("checksum mismatch")
    version, mode_code, m_done, nrows = struct.unpack_from("<IBQI", payload, 4)
    if version != VERSION:
        raise VersionMismatchError(f"checkpoint version {version}, expected {VERSION}")
    if mode_code not in _MODE_NAMES:
        raise CorruptCheckpointError(f"unknown mode byte {mode_code}")
    file_mode = _MODE_NAMES[mode_code]
    if mode is not None and mode != file_mode:
        raise ModeMismatchError(f"checkpoint holds a {file_mode} table, {mode} requested")
    pos = 4 + struct.calcsize("<IBQI")
    lengths = struct.unpack_from(f"<{nrows}Q", payload, pos)
    pos += 8 * nrows
    for n, length in enumerate(lengths):
        if length != m_done - row_start(n) + 1:
            raise CorruptCheckpointError(f"row {n} has inconsistent length {length}")
    rows = []
    try:
        for length in lengths:
            if file_mode == FLOAT:
                rows.append(np.frombuffer(payload, dtype="<f8", count=length, offset=pos).astype(np.float64))
                pos += 8 * length
            else:
                values = []
                for _ in range(length):
                    nbytes, sign = struct.unpack_from("<QB", payload, pos)
                    pos += 9
                    mag = int.from_bytes(payload[pos : pos + nbytes], "little")
                    pos += nbytes
                    (exponent,) = struct.unpack_from("<Q", payload, pos)
                    pos += 8
                    values.append(DyadicRational(-mag if sign else mag, exponent))
                rows.append(values)
    except (struct.error, ValueError) as exc:
        raise CorruptCheckpointError(f"truncated checkpoint: {exc}") from exc
    if pos != len(payload):
        raise CorruptCheckpointError("trailing bytes in checkpoint")
    table = BetaTable(file_mode, **table_kwargs)
    table._load_rows(m_done, rows)
    return table


def checkpoint_save(table: BetaTable, path: str | os.PathLike) -> None:
    blob = encode(table)
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def checkpoint_load(path: str | os.PathLike, mode: str | None = None, **table_kwargs) -> BetaTable:
    with open(path, "rb") as fh:
        return decode(fh.read(), mode, **table_kwargs)


def checkpoint_info(path: str | os.PathLike) -> dict:
    with open(path, "rb") as fh:
        blob = fh.read()
    table = decode(blob)
    return {"mode": table.mode, "m_done": table.m_done, "rows": table.n_max + 1, "bytes": len(blob)}
