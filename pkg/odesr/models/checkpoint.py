"""
Model checkpoint container.

Layout (little-endian):
    magic      8 bytes  b"ODESRCK1"
    version    u32
    header     u32 length + UTF-8 JSON (generator config, precision, extra)
    tensors    per tensor: u16 name length, name, u8 ndim, u32 dims, float32 values

Values are stored as float32; 32-bit models round-trip bit-exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np

from odesr.core.config import Precision, config_to_dict, generator_config_from_dict
from odesr.core.exceptions import CheckpointError, ConfigurationError

from .generator import Generator

MAGIC = b"ODESRCK1"
VERSION = 1


def save_checkpoint(path: str | Path, generator: Generator, extra: dict[str, Any] | None = None) -> Path:
    """Write a generator's config and parameters to ``path``."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    state = generator.state_dict()
    header = {
        "generator": config_to_dict(generator.config),
        "precision": generator.precision.value,
        "tensors": len(state),
        "extra": extra or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    chunks = [MAGIC, struct.pack("<II", VERSION, len(header_bytes)), header_bytes]
    for name, array in state.items():
        name_bytes = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(name_bytes)))
        chunks.append(name_bytes)
        chunks.append(struct.pack("<B", array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(np.ascontiguousarray(array, dtype="<f4").tobytes())
    out.write_bytes(b"".join(chunks))
    return out


class _Reader:
    def __init__(self, data: bytes, path: str) -> None:
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, count: int) -> bytes:
        if self.offset + count > len(self.data):
            raise CheckpointError(self.path, "truncated file")
        chunk = self.data[self.offset : self.offset + count]
        self.offset += count
        return chunk

    def unpack(self, fmt: str) -> tuple[Any, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_checkpoint(path: str | Path) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    """Decode a checkpoint into its header and named float32 arrays.

    Raises:
        CheckpointError: On missing file, bad magic, unknown version or truncation.
    """
    source = Path(path)
    if not source.is_file():
        raise CheckpointError(str(path), "file not found")
    reader = _Reader(source.read_bytes(), str(path))
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(str(path), "bad magic")
    version, header_len = reader.unpack("<II")
    if version != VERSION:
        raise CheckpointError(str(path), f"unsupported version {version}")
    try:
        header = json.loads(reader.take(header_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(str(path), f"bad header: {e}") from None
    tensors: dict[str, np.ndarray] = {}
    for _ in range(int(header.get("tensors", 0))):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        (ndim,) = reader.unpack("<B")
        dims = reader.unpack(f"<{ndim}I") if ndim else ()
        count = int(np.prod(dims)) if dims else 1
        tensors[name] = np.frombuffer(reader.take(4 * count), dtype="<f4").reshape(dims).copy()
    if reader.offset != len(reader.data):
        raise CheckpointError(str(path), "trailing bytes")
    return header, tensors


def load_checkpoint(path: str | Path, precision: Precision | str | None = None) -> tuple[Generator, dict[str, Any]]:
    """Rebuild a Generator from a checkpoint.

    Returns:
        The generator and the header's ``extra`` mapping.
    """
    header, tensors = read_checkpoint(path)
    try:
        config = generator_config_from_dict(header["generator"])
    except (KeyError, ConfigurationError) as e:
        raise CheckpointError(str(path), f"bad generator config: {e}") from None
    generator = Generator(config, precision=precision or header.get("precision", "f32"))
    generator.load_state_dict(tensors)
    return generator, header.get("extra", {})
