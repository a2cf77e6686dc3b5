"""
Binary checkpoint format (all integers little-endian):

    magic        8 bytes  b"FEREXCK1"
    version      u16      1
    config_len   u32      length of the UTF-8 JSON that follows
    config       bytes    ModelConfig as JSON
    count        u32      number of tensors
    per tensor:  u8 rank, rank x u32 dims, prod(dims) x f32 payload

Tensors appear in canonical parameter order (conv1.weight, conv1.bias, ...).
"""

import json
import logging
import struct
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from ferex.core.network import Parameters, expected_shapes
from ferex.errors import CheckpointCorruptError, CheckpointFormatError
from ferex.models.schemas import ModelConfig
from ferex.services.artifacts import atomic_write_bytes

logger = logging.getLogger(__name__)

MAGIC = b"FEREXCK1"
VERSION = 1


def encode_checkpoint(params: Parameters, config: ModelConfig) -> bytes:
    config_json = config.model_dump_json().encode("utf-8")
    parts = [MAGIC, struct.pack("<H", VERSION), struct.pack("<I", len(config_json)), config_json]
    tensors = params.tensors()
    parts.append(struct.pack("<I", len(tensors)))
    for tensor in tensors:
        parts.append(struct.pack("<B", tensor.ndim))
        parts.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        parts.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes, name: str):
        self.data = data
        self.pos = 0
        self.name = name

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointCorruptError(
                f"{self.name}: truncated while reading {what} "
                f"(need {n} bytes at offset {self.pos}, file has {len(self.data)})"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_checkpoint(data: bytes, name: str = "<checkpoint>") -> tuple[Parameters, ModelConfig]:
    if len(data) < len(MAGIC) and MAGIC.startswith(data):
        raise CheckpointCorruptError(
            f"{name}: truncated while reading magic ({len(data)} of {len(MAGIC)} bytes)"
        )
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointFormatError(f"{name}: not a ferex checkpoint (bad magic)")
    reader = _Reader(data, name)
    reader.take(len(MAGIC), "magic")
    (version,) = reader.unpack("<H", "version")
    if version != VERSION:
        raise CheckpointFormatError(
            f"{name}: unsupported checkpoint version (expected {VERSION}, found {version})"
        )

    (config_len,) = reader.unpack("<I", "config length")
    raw_config = reader.take(config_len, "model config")
    try:
        config = ModelConfig.model_validate(json.loads(raw_config.decode("utf-8")))
    except (UnicodeDecodeError, json.JSONDecodeError, ValidationError) as e:
        raise CheckpointCorruptError(f"{name}: invalid model config: {e}")

    (count,) = reader.unpack("<I", "tensor count")
    expected = expected_shapes(config)
    if count != len(expected):
        raise CheckpointCorruptError(
            f"{name}: config implies {len(expected)} tensors, shape table lists {count}"
        )
    tensors = []
    for tensor_name, shape in expected:
        (rank,) = reader.unpack("<B", f"{tensor_name} rank")
        if not 1 <= rank <= 4:
            raise CheckpointCorruptError(f"{name}: {tensor_name} has invalid rank {rank}")
        dims = reader.unpack(f"<{rank}I", f"{tensor_name} dims")
        if tuple(dims) != shape:
            raise CheckpointCorruptError(
                f"{name}: {tensor_name} listed as {tuple(dims)}, config implies {shape}"
            )
        size = int(np.prod(dims))
        payload = reader.take(4 * size, f"{tensor_name} payload")
        tensor = np.frombuffer(payload, dtype="<f4").astype(np.float32).reshape(dims)
        if not np.all(np.isfinite(tensor)):
            raise CheckpointCorruptError(f"{name}: {tensor_name} contains non-finite values")
        tensors.append(tensor)
    if reader.pos != len(data):
        raise CheckpointCorruptError(
            f"{name}: {len(data) - reader.pos} unexpected trailing bytes after payload"
        )
    return Parameters.from_tensors(config, tensors), config


def save_checkpoint(params: Parameters, config: ModelConfig, path: Path) -> str:
    """Write atomically; returns the parameter digest."""
    atomic_write_bytes(Path(path), encode_checkpoint(params, config))
    digest = params.digest()
    logger.info("[Checkpoint] Saved %s (digest %s)", path, digest[:12])
    return digest


def load_checkpoint(path: Path) -> tuple[Parameters, ModelConfig]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointFormatError(f"cannot read checkpoint {path}: {e.strerror or e}")
    params, config = decode_checkpoint(data, str(path))
    logger.info("[Checkpoint] Loaded %s (input %d)", path, config.input_size)
    return params, config
