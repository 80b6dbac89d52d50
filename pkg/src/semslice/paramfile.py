"""Binary parameter files.

Layout (all integers little-endian)::

    magic     8 bytes  b"SEMSLNN\\x00"
    version   u16
    meta_len  u32, then meta_len bytes of UTF-8 JSON (may be "{}")
    n_sets    u32
    per set:
        name_len u16, name (UTF-8)
        n_layers u32
        layer sizes   (n_layers + 1) x u32
        per layer: tag_len u8, activation tag (ASCII)
        per layer: W row-major float64 (in x out), then b float64 (out)
    crc32     u32 over every preceding byte

Round trips are bit-exact because the payload is the raw float64 bytes.
"""
from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .nn import ParamSet

MAGIC = b"SEMSLNN\x00"
VERSION = 1


class ParamFileError(ValueError):
    pass


def encode(sets: dict[str, ParamSet], meta: dict | None = None) -> bytes:
    parts = [MAGIC, struct.pack("<H", VERSION)]
    meta_bytes = json.dumps(meta or {}, sort_keys=True).encode("utf-8")
    parts.append(struct.pack("<I", len(meta_bytes)))
    parts.append(meta_bytes)
    parts.append(struct.pack("<I", len(sets)))
    for name, params in sets.items():
        name_b = name.encode("utf-8")
        parts.append(struct.pack("<H", len(name_b)))
        parts.append(name_b)
        n_layers = len(params.weights)
        parts.append(struct.pack("<I", n_layers))
        parts.append(struct.pack(f"<{n_layers + 1}I", *params.layer_sizes))
        for act in params.activations:
            tag = act.encode("ascii")
            parts.append(struct.pack("<B", len(tag)))
            parts.append(tag)
        for w, b in zip(params.weights, params.biases):
            parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
            parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ParamFileError("truncated parameter file")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode(data: bytes) -> tuple[dict[str, ParamSet], dict]:
    if len(data) < len(MAGIC) + 6 or data[:len(MAGIC)] != MAGIC:
        raise ParamFileError("not a parameter file (bad magic)")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise ParamFileError("checksum mismatch")
    r = _Reader(body)
    r.take(len(MAGIC))
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise ParamFileError(f"unsupported parameter file version {version}")
    (meta_len,) = r.unpack("<I")
    meta = json.loads(r.take(meta_len).decode("utf-8"))
    (n_sets,) = r.unpack("<I")
    sets: dict[str, ParamSet] = {}
    for _ in range(n_sets):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (n_layers,) = r.unpack("<I")
        sizes = list(r.unpack(f"<{n_layers + 1}I"))
        acts = []
        for _ in range(n_layers):
            (tag_len,) = r.unpack("<B")
            acts.append(r.take(tag_len).decode("ascii"))
        weights, biases = [], []
        for i in range(n_layers):
            n_w = sizes[i] * sizes[i + 1]
            w = np.frombuffer(r.take(8 * n_w), dtype="<f8").reshape(sizes[i], sizes[i + 1])
            b = np.frombuffer(r.take(8 * sizes[i + 1]), dtype="<f8")
            weights.append(w.astype(float))
            biases.append(b.astype(float))
        sets[name] = ParamSet(sizes, weights, biases, acts)
    if r.pos != len(body):
        raise ParamFileError("trailing bytes after last parameter set")
    return sets, meta


def save(path, sets: dict[str, ParamSet], meta: dict | None = None) -> None:
    Path(path).write_bytes(encode(sets, meta))


def load(path) -> tuple[dict[str, ParamSet], dict]:
    return decode(Path(path).read_bytes())
