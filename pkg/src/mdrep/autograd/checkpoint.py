"""Parameter checkpoint files ("UDPT").

Layout: magic ``UDPT``, version u16, parameter count u32; then for each
parameter (in sorted name order, so files are reproducible): name length
(u16) + UTF-8 name, rank (u8), dims (u32 each), row-major float32 values.
All integers little-endian.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

_MAGIC = b"UDPT"
_VERSION = 1


def save_params(path: str | Path, params: dict[str, np.ndarray]) -> None:
    chunks = [_MAGIC, struct.pack("<HI", _VERSION, len(params))]
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name], dtype="<f4")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_params(path: str | Path) -> dict[str, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: bad checkpoint magic {raw[:4]!r}")
    version, count = struct.unpack_from("<HI", raw, 4)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    offset = 10
    params: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", raw, offset)
        offset += 2
        name = raw[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack_from("<B", raw, offset)
        offset += 1
        dims = struct.unpack_from(f"<{rank}I", raw, offset)
        offset += 4 * rank
        size = int(np.prod(dims)) if rank else 1
        values = np.frombuffer(raw, dtype="<f4", count=size, offset=offset)
        offset += 4 * size
        params[name] = values.reshape(dims).copy()
    if offset != len(raw):
        raise ValueError(f"{path}: {len(raw) - offset} trailing bytes")
    return params
