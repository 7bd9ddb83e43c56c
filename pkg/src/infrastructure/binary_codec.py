"""
Little-endian binary packing helpers shared by the frame and checkpoint
formats.
"""

import struct
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from src.core.errors import FormatError


def pack_uint8(n: int) -> bytes:
    return struct.pack("<B", n)


def pack_uint32(n: int) -> bytes:
    return struct.pack("<I", n)


def pack_int64(n: int) -> bytes:
    return struct.pack("<q", n)


def pack_string(text: str) -> bytes:
    data = text.encode("utf-8")
    return pack_uint32(len(data)) + data


def pack_array(values: np.ndarray, dtype: str) -> bytes:
    """Raw little-endian bytes of `values` cast to dtype (e.g. '<f8')"""
    return np.ascontiguousarray(values, dtype=np.dtype(dtype)).tobytes()


class Reader:
    """
    Sequential reader over a byte buffer.

    Every read checks the remaining length and raises FormatError naming the
    source path on truncation.
    """

    def __init__(self, data: bytes, path: Optional[Union[str, Path]] = None):
        self.data = data
        self.offset = 0
        self.path = path

    def _take(self, size: int, what: str) -> bytes:
        if size < 0 or self.offset + size > len(self.data):
            raise FormatError(f"truncated while reading {what} at byte {self.offset}", self.path)
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def magic(self, expected: bytes) -> None:
        if self._take(len(expected), "magic") != expected:
            raise FormatError(f"bad magic, expected {expected!r}", self.path)

    def uint8(self, what: str = "uint8") -> int:
        return struct.unpack("<B", self._take(1, what))[0]

    def uint32(self, what: str = "uint32") -> int:
        return struct.unpack("<I", self._take(4, what))[0]

    def int64(self, what: str = "int64") -> int:
        return struct.unpack("<q", self._take(8, what))[0]

    def string(self, what: str = "string") -> str:
        size = self.uint32(f"{what} length")
        try:
            return self._take(size, what).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{what} is not valid UTF-8", self.path) from exc

    def array(self, dtype: str, shape: tuple, what: str = "array") -> np.ndarray:
        dt = np.dtype(dtype)
        count = int(np.prod(shape)) if shape else 1
        raw = self._take(count * dt.itemsize, what)
        return np.frombuffer(raw, dtype=dt).reshape(shape).copy()

    def version(self, expected: int) -> int:
        found = self.uint32("version")
        if found != expected:
            raise FormatError(f"format version {found} is not supported (expected {expected})", self.path)
        return found

    def finish(self) -> None:
        if self.offset != len(self.data):
            raise FormatError(f"{len(self.data) - self.offset} trailing bytes", self.path)


def read_bytes(path: Union[str, Path]) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise FormatError("file not found", path) from exc


def join(parts: List[bytes]) -> bytes:
    return b"".join(parts)
