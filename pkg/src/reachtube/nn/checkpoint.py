"""Binary model checkpoints.

Layout (all integers little-endian):

* magic ``"HJRM"`` (4 bytes)
* format version ``u32`` (currently 1)
* architecture tag ``u8``: 0 for the spectral-convolution network, 1 for
  the attention network
* config block: field count ``u32`` followed by that many ``u32`` values;
  for arch 0 the fields are ``(in_channels, out_channels, width, modes1,
  modes2, n_blocks)``, for arch 1 ``(in_channels, out_channels, width,
  n_blocks, mlp_hidden)``
* one record per parameter, in the model's fixed parameter order:
  ``name_len u32``, name bytes (utf-8), ``ndim u32``, ``dims u32[ndim]``,
  payload ``f32[]`` little-endian in C order.  Complex-valued weights are
  stored via their trailing real/imaginary axis, which appears in
  ``dims`` and makes the payload interleaved re/im.

Loading rebuilds the model from the config block and then overwrites each
parameter by name, so a checkpoint is valid only if its records exactly
match the architecture's parameter set.
"""

from __future__ import annotations

import struct

import numpy as np

from .models import FNOConfig, OperatorModel, TNOConfig

__all__ = ["save_checkpoint", "load_checkpoint", "CheckpointError"]

MAGIC = b"HJRM"
VERSION = 1
_ARCH_TAGS = {"fno": 0, "tno": 1}
_FNO_FIELDS = ("in_channels", "out_channels", "width", "modes1", "modes2", "n_blocks")
_TNO_FIELDS = ("in_channels", "out_channels", "width", "n_blocks", "mlp_hidden")


class CheckpointError(ValueError):
    """Malformed or mismatched checkpoint data."""


def save_checkpoint(model: OperatorModel, path) -> None:
    parts = [MAGIC, struct.pack("<I", VERSION), struct.pack("<B", _ARCH_TAGS[model.arch])]
    fields = _FNO_FIELDS if model.arch == "fno" else _TNO_FIELDS
    values = [getattr(model.config, f) for f in fields]
    parts.append(struct.pack("<I", len(values)))
    parts.append(struct.pack(f"<{len(values)}I", *values))
    for name, tensor in model.params.items():
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        dims = tensor.data.shape
        parts.append(struct.pack("<I", len(dims)))
        parts.append(struct.pack(f"<{len(dims)}I", *dims))
        parts.append(np.ascontiguousarray(tensor.data, dtype="<f4").tobytes())
    with open(path, "wb") as handle:
        handle.write(b"".join(parts))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.offset = 0

    def take(self, count: int) -> bytes:
        if self.offset + count > len(self.blob):
            raise CheckpointError(
                f"truncated checkpoint: needed {count} bytes at offset {self.offset}"
            )
        out = self.blob[self.offset:self.offset + count]
        self.offset += count
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1))[0]


def load_checkpoint(path) -> OperatorModel:
    with open(path, "rb") as handle:
        blob = handle.read()
    reader = _Reader(blob)
    if reader.take(4) != MAGIC:
        raise CheckpointError("bad magic; not a model checkpoint")
    version = reader.u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    tag = reader.u8()
    if tag == 0:
        arch, fields, config_cls = "fno", _FNO_FIELDS, FNOConfig
    elif tag == 1:
        arch, fields, config_cls = "tno", _TNO_FIELDS, TNOConfig
    else:
        raise CheckpointError(f"unknown architecture tag {tag}")
    count = reader.u32()
    if count != len(fields):
        raise CheckpointError(f"config block has {count} fields, expected {len(fields)}")
    values = struct.unpack(f"<{count}I", reader.take(4 * count))
    config = config_cls(**dict(zip(fields, values)))

    model = OperatorModel.build(arch, config, seed=0, dtype=np.float32)
    seen = []
    while reader.offset < len(blob):
        name_len = reader.u32()
        name = reader.take(name_len).decode("utf-8")
        ndim = reader.u32()
        dims = struct.unpack(f"<{ndim}I", reader.take(4 * ndim))
        payload = reader.take(4 * int(np.prod(dims, dtype=np.int64)))
        if name not in model.params:
            raise CheckpointError(f"unexpected parameter {name!r} at offset {reader.offset}")
        expected = model.params[name].data.shape
        if tuple(dims) != expected:
            raise CheckpointError(
                f"parameter {name!r} has dims {tuple(dims)}, expected {expected}"
            )
        model.params[name].data = np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
        seen.append(name)
    if seen != list(model.params):
        missing = [n for n in model.params if n not in seen]
        raise CheckpointError(f"checkpoint missing or misordered parameters: {missing}")
    return model
