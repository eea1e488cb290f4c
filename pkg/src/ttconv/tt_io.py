"""TTv1 tensor persistence.

Layout (all integers little-endian uint64, all floats little-endian float64):

    bytes 0..3   magic "TTv1"
    uint64       dimension d
    uint64 * d   mode sizes
    uint64 * d+1 ranks r_0 .. r_d
    cores        complex entries as (real, imag) float64 pairs, row-major
                 in (left_rank, mode, right_rank) order, core 1 first

Writes are atomic (temp file + rename): a failed write leaves no partial file.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .tt import TTTensor

__all__ = ["TTFormatError", "tt_write", "tt_read"]

MAGIC = b"TTv1"
_MAX_SANE = 2**40  # guards against garbage headers allocating absurd buffers


class TTFormatError(ValueError):
    """Corrupt or truncated TTv1 payload; carries the failing byte offset."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def tt_write(t: TTTensor, path):
    """Serialize a TT tensor; byte-exact round trip with :func:`tt_read`."""
    header = bytearray()
    header += MAGIC
    header += struct.pack("<Q", t.d)
    header += struct.pack(f"<{t.d}Q", *t.mode_sizes)
    header += struct.pack(f"<{t.d + 1}Q", *t.ranks)
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ttv1-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(bytes(header))
            for core in t.cores:
                flat = np.ascontiguousarray(core, dtype="<c16")
                fh.write(flat.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def tt_read(path) -> TTTensor:
    with open(path, "rb") as fh:
        data = fh.read()
    off = 0

    def take(nbytes, what):
        nonlocal off
        if off + nbytes > len(data):
            raise TTFormatError(f"truncated file while reading {what}", off)
        chunk = data[off : off + nbytes]
        off += nbytes
        return chunk

    magic = take(4, "magic")
    if magic != MAGIC:
        raise TTFormatError(f"bad magic {magic!r}, expected {MAGIC!r}", 0)
    (d,) = struct.unpack("<Q", take(8, "dimension"))
    if not 1 <= d <= 64:
        raise TTFormatError(f"implausible dimension {d}", off - 8)
    sizes = struct.unpack(f"<{d}Q", take(8 * d, "mode sizes"))
    ranks = struct.unpack(f"<{d + 1}Q", take(8 * (d + 1), "ranks"))
    if ranks[0] != 1 or ranks[-1] != 1:
        raise TTFormatError("boundary ranks must be 1", off - 8 * (d + 1))
    if any(s < 1 or s > _MAX_SANE for s in sizes) or any(
        r < 1 or r > _MAX_SANE for r in ranks
    ):
        raise TTFormatError("implausible sizes or ranks", off)
    cores = []
    for k in range(d):
        count = ranks[k] * sizes[k] * ranks[k + 1]
        raw = take(16 * count, f"core {k}")
        core = np.frombuffer(raw, dtype="<c16").reshape(ranks[k], sizes[k], ranks[k + 1])
        cores.append(core)
    if off != len(data):
        raise TTFormatError(f"{len(data) - off} trailing bytes after last core", off)
    return TTTensor(cores)
