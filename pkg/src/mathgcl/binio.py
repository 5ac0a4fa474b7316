"""Little-endian binary primitives shared by the artifact file formats."""

from __future__ import annotations

import struct

import numpy as np

from .errors import MalformedRecord


def write_u32(fh, value: int):
    fh.write(struct.pack("<I", value))


def read_u32(fh) -> int:
    raw = fh.read(4)
    if len(raw) != 4:
        raise MalformedRecord("truncated file: expected u32")
    return struct.unpack("<I", raw)[0]


def write_str(fh, text: str):
    data = text.encode("utf-8")
    write_u32(fh, len(data))
    fh.write(data)


def read_str(fh) -> str:
    n = read_u32(fh)
    raw = fh.read(n)
    if len(raw) != n:
        raise MalformedRecord("truncated file: expected string payload")
    return raw.decode("utf-8")


def write_f32_array(fh, arr: np.ndarray):
    fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_f32_array(fh, count: int) -> np.ndarray:
    raw = fh.read(4 * count)
    if len(raw) != 4 * count:
        raise MalformedRecord("truncated file: expected float payload")
    return np.frombuffer(raw, dtype="<f4").astype(np.float64)


def check_magic(fh, magic: bytes, what: str):
    got = fh.read(len(magic))
    if got != magic:
        raise MalformedRecord(f"not a {what} file (bad magic {got!r})")
