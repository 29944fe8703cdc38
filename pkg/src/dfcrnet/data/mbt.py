"""MBT multi-band tile format.

Layout (little-endian throughout):

    bytes 0..3   magic "MBT1"
    bytes 4..7   height, u32
    bytes 8..11  width, u32
    bytes 12..15 bands, u32
    byte  16     dtype code, u8 (1 = 32-bit float; the only defined code)
    bytes 17..   payload: bands stored planar (band-major), row-major within
                 each band, H * W * bands * 4 bytes of float32

The class label lives in the sidecar manifest, not in the tile file.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import MbtFormatError, MbtTruncationError

MAGIC = b"MBT1"
DTYPE_FLOAT32 = 1
HEADER = struct.Struct("<4sIIIB")


@dataclass
class MbtTile:
    """One multi-band tile; data is [bands, H, W] float32."""

    data: np.ndarray
    label: int | None = None

    def __post_init__(self):
        if self.data.ndim != 3:
            raise MbtFormatError(f"tile data must be 3-D [bands, H, W], got {self.data.ndim}-D")
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


def write_mbt(tile: MbtTile) -> bytes:
    """Serialize a tile; the inverse of read_mbt."""
    header = HEADER.pack(MAGIC, tile.height, tile.width, tile.bands, DTYPE_FLOAT32)
    payload = tile.data.astype("<f4").tobytes()
    return header + payload


def read_mbt(blob: bytes) -> MbtTile:
    """Parse a tile, rejecting bad magic, unknown dtype, or truncated payload."""
    if len(blob) < HEADER.size:
        raise MbtTruncationError(
            f"stream of {len(blob)} bytes is shorter than the {HEADER.size}-byte header"
        )
    magic, height, width, bands, dtype_code = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise MbtFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if dtype_code != DTYPE_FLOAT32:
        raise MbtFormatError(f"unknown dtype code {dtype_code}")
    expected = height * width * bands * 4
    payload = blob[HEADER.size:]
    if len(payload) != expected:
        raise MbtTruncationError(
            f"payload is {len(payload)} bytes, header declares {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(bands, height, width)
    return MbtTile(data=data.copy())


def save_mbt(tile: MbtTile, path: str | Path) -> None:
    Path(path).write_bytes(write_mbt(tile))


def load_mbt(path: str | Path) -> MbtTile:
    return read_mbt(Path(path).read_bytes())
