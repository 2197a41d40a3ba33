"""Binary wire formats for parameters and feature distributions.

Everything here is bit-exact and little-endian so that an encode/decode
roundtrip reproduces every float64 unchanged and two encodes of the same
value are byte-identical. The parameter format:

    header: magic "FCHP" | u8 version=1 | u8 layer_count | 10 zero bytes
    per layer: u32 rows | u32 cols | rows*cols f64 weights (row-major)
               | cols f64 bias

The distribution payload is u32 name length, the UTF-8 name, mean and std
as f64, then the sample count as u64.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError, IntegrityError, NumericalError
from .nn import DenseLayer, ModelParams

MAGIC = b"FCHP"
VERSION = 1
HEADER_LEN = 16
_HEADER = struct.Struct("<4sBB10s")
_LAYER_HEAD = struct.Struct("<II")
_DIST_NAME_LEN = struct.Struct("<I")
_DIST_STATS = struct.Struct("<ddQ")


def params_wire_size(shapes: list[tuple[int, int]]) -> int:
    """Exact byte length of encode_params for the given layer shapes."""
    n = HEADER_LEN
    for rows, cols in shapes:
        n += _LAYER_HEAD.size + 8 * rows * cols + 8 * cols
    return n


def encode_params(params: ModelParams) -> bytes:
    if len(params.layers) == 0 or len(params.layers) > 255:
        raise FormatError(f"cannot encode {len(params.layers)} layers (need 1..255)")
    params.check_finite()
    parts = [_HEADER.pack(MAGIC, VERSION, len(params.layers), b"\x00" * 10)]
    for layer in params.layers:
        rows, cols = layer.weights.shape
        if layer.bias.shape != (cols,):
            raise FormatError(f"bias length {layer.bias.shape} does not match cols {cols}")
        parts.append(_LAYER_HEAD.pack(rows, cols))
        parts.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_params(blob: bytes, expected_shapes: list[tuple[int, int]] | None = None) -> ModelParams:
    """Parse a parameter blob; malformed bytes raise FormatError.

    When expected_shapes is given, any disagreement (layer count, shape, or
    total length) raises IntegrityError instead, since with a length-checked
    transport it means the payload was produced with a different key or got
    corrupted.
    """
    if expected_shapes is not None and len(blob) != params_wire_size(expected_shapes):
        raise IntegrityError(
            f"payload is {len(blob)} bytes, expected {params_wire_size(expected_shapes)}"
        )
    if len(blob) < HEADER_LEN:
        raise FormatError(f"blob too short for header ({len(blob)} bytes)")
    magic, version, layer_count, _reserved = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if layer_count == 0:
        raise FormatError("zero layer count")

    off = HEADER_LEN
    layers = []
    for i in range(layer_count):
        if off + _LAYER_HEAD.size > len(blob):
            raise FormatError(f"truncated at layer {i} header")
        rows, cols = _LAYER_HEAD.unpack_from(blob, off)
        off += _LAYER_HEAD.size
        if rows == 0 or cols == 0:
            raise FormatError(f"layer {i}: zero dimension ({rows}x{cols})")
        nbytes = 8 * rows * cols
        if off + nbytes + 8 * cols > len(blob):
            raise FormatError(f"truncated in layer {i} data")
        w = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=off).reshape(rows, cols)
        off += nbytes
        b = np.frombuffer(blob, dtype="<f8", count=cols, offset=off)
        off += 8 * cols
        layers.append(DenseLayer(w.astype(np.float64), b.astype(np.float64)))
    if off != len(blob):
        raise FormatError(f"{len(blob) - off} trailing bytes after last layer")

    out = ModelParams(layers)
    if expected_shapes is not None and out.shapes() != list(expected_shapes):
        raise IntegrityError(f"decoded shapes {out.shapes()} != expected {list(expected_shapes)}")
    try:
        out.check_finite()
    except NumericalError as e:
        raise FormatError(str(e)) from e
    return out


def encode_distribution(name: str, mean: float, std: float, n: int) -> bytes:
    name_bytes = name.encode("utf-8")
    return _DIST_NAME_LEN.pack(len(name_bytes)) + name_bytes + _DIST_STATS.pack(mean, std, n)


def decode_distribution(blob: bytes) -> tuple[str, float, float, int]:
    if len(blob) < _DIST_NAME_LEN.size:
        raise FormatError("distribution blob too short for name length")
    (name_len,) = _DIST_NAME_LEN.unpack_from(blob, 0)
    expected = _DIST_NAME_LEN.size + name_len + _DIST_STATS.size
    if len(blob) != expected:
        raise FormatError(f"distribution blob is {len(blob)} bytes, expected {expected}")
    try:
        name = blob[_DIST_NAME_LEN.size : _DIST_NAME_LEN.size + name_len].decode("utf-8")
    except UnicodeDecodeError as e:
        raise FormatError(f"distribution name is not valid UTF-8: {e}") from e
    mean, std, n = _DIST_STATS.unpack_from(blob, _DIST_NAME_LEN.size + name_len)
    return name, mean, std, n
