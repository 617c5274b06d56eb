"""Little-endian binary helpers shared by the TADS / TAMD / TATC codecs."""

import struct
from typing import Tuple

import numpy as np

from core.exceptions import FormatError

FLOAT = np.dtype("<f8")


def pack_floats(values: np.ndarray) -> bytes:
    """Row-major little-endian float64 bytes of ``values``."""
    return np.ascontiguousarray(values, dtype=FLOAT).tobytes()


class BinaryReader:
    """Cursor over a bytes buffer that raises FormatError instead of reading short."""

    def __init__(self: "BinaryReader", buffer: bytes, label: str) -> None:
        """Wrap ``buffer``; ``label`` names the artifact in error messages."""
        self.buffer = buffer
        self.label = label
        self.offset = 0

    def _take(self: "BinaryReader", size: int) -> bytes:
        end = self.offset + size
        if end > len(self.buffer):
            raise FormatError(
                f"{self.label}: truncated at byte {len(self.buffer)} "
                f"(needed {end})"
            )
        chunk = self.buffer[self.offset : end]
        self.offset = end
        return chunk

    def unpack(self: "BinaryReader", fmt: str) -> Tuple:
        """Read one struct record (``fmt`` must start with ``<``)."""
        return struct.unpack(fmt, self._take(struct.calcsize(fmt)))

    def floats(self: "BinaryReader", count: int) -> np.ndarray:
        """Read ``count`` float64 values as a writable array."""
        return np.frombuffer(self._take(count * FLOAT.itemsize), dtype=FLOAT).astype(
            np.float64
        )

    def expect_magic(self: "BinaryReader", magic: bytes, versions: Tuple[int, ...]) -> int:
        """Check magic bytes and a u32 version; return the version."""
        found = self._take(len(magic))
        if found != magic:
            raise FormatError(f"{self.label}: bad magic {found!r}, expected {magic!r}")
        (version,) = self.unpack("<I")
        if version not in versions:
            raise FormatError(f"{self.label}: unsupported version {version}")
        return version

    def expect_end(self: "BinaryReader") -> None:
        """Reject trailing bytes."""
        if self.offset != len(self.buffer):
            raise FormatError(
                f"{self.label}: {len(self.buffer) - self.offset} trailing bytes"
            )
