"""Checkpoint container I/O and the flat parameter workspace.

File layout: an unsigned 64-bit little-endian header length, a UTF-8 JSON
header mapping tensor name -> {"dtype", "shape", "data_offsets"}, then the
raw little-endian tensor data. Only "F32" and "F64" dtypes exist; offsets
are byte ranges [begin, end) into the data section and must tile it exactly
with no gaps or overlaps.

Saving is byte-deterministic: names are serialized sorted, the JSON is
compact, and data offsets are assigned in sorted-name order, so identical
tensors always produce identical files. The watermarking pipeline works on
one flat float64 vector; `flatten` builds it in sorted-name order and
`restore` inverts it, casting back to each tensor's stored dtype.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ContainerFormatError, NonFiniteParameterError

_DTYPE_TAGS = {"F32": np.dtype("<f4"), "F64": np.dtype("<f8")}
_TAG_FOR_KIND = {np.dtype(np.float32): "F32", np.dtype(np.float64): "F64"}
_HEADER_LEN_CAP = 1 << 30


@dataclass(frozen=True)
class TensorSpec:
    """Shape/dtype identity of one stored tensor."""

    name: str
    dtype: str
    shape: tuple[int, ...]

    @property
    def count(self) -> int:
        return math.prod(self.shape)

    @property
    def numpy_dtype(self) -> np.dtype:
        return _DTYPE_TAGS[self.dtype]


@dataclass(frozen=True)
class FlattenManifest:
    """Recipe for splitting the flat work vector back into tensors.

    Specs are stored in the flattening order (sorted by name); offsets into
    the flat vector follow from the cumulative counts.
    """

    specs: tuple[TensorSpec, ...]

    @property
    def total(self) -> int:
        return sum(s.count for s in self.specs)

    def offsets(self) -> list[tuple[int, int]]:
        out = []
        pos = 0
        for s in self.specs:
            out.append((pos, pos + s.count))
            pos += s.count
        return out


def _tag_for(arr: np.ndarray, name: str) -> str:
    tag = _TAG_FOR_KIND.get(arr.dtype.newbyteorder("="))
    if tag is None:
        raise ContainerFormatError(
            f"tensor '{name}' has unsupported dtype {arr.dtype}; only float32/float64"
        )
    return tag


def save_container(path: str, tensors: dict[str, np.ndarray]) -> None:
    """Write tensors to `path` in the container format, deterministically."""
    header: dict[str, dict] = {}
    chunks: list[bytes] = []
    pos = 0
    for name in sorted(tensors):
        if not name:
            raise ContainerFormatError("tensor names must be non-empty")
        arr = np.asarray(tensors[name])
        tag = _tag_for(arr, name)
        raw = np.ascontiguousarray(arr).astype(_DTYPE_TAGS[tag], copy=False).tobytes()
        header[name] = {
            "dtype": tag,
            "shape": list(arr.shape),
            "data_offsets": [pos, pos + len(raw)],
        }
        chunks.append(raw)
        pos += len(raw)
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for raw in chunks:
            fh.write(raw)


def load_container(path: str) -> dict[str, np.ndarray]:
    """Read a container; returns name -> native-endian array, sorted by name."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 8:
        raise ContainerFormatError("file too short for header length")
    (hlen,) = struct.unpack_from("<Q", data)
    if hlen > _HEADER_LEN_CAP or 8 + hlen > len(data):
        raise ContainerFormatError("header length exceeds file size")
    try:
        header = json.loads(data[8 : 8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerFormatError(f"bad container header: {exc}") from exc
    if not isinstance(header, dict):
        raise ContainerFormatError("container header must be a JSON object")

    buf = data[8 + hlen :]
    out: dict[str, np.ndarray] = {}
    spans: list[tuple[int, int]] = []
    for name in sorted(header):
        entry = header[name]
        if not isinstance(entry, dict):
            raise ContainerFormatError(f"entry for '{name}' must be an object")
        tag = entry.get("dtype")
        if tag not in _DTYPE_TAGS:
            raise ContainerFormatError(f"tensor '{name}': unknown dtype {tag!r}")
        shape = entry.get("shape")
        if not isinstance(shape, list) or any(
            not isinstance(d, int) or d < 0 for d in shape
        ):
            raise ContainerFormatError(f"tensor '{name}': bad shape {shape!r}")
        offs = entry.get("data_offsets")
        if (
            not isinstance(offs, list)
            or len(offs) != 2
            or any(not isinstance(o, int) for o in offs)
        ):
            raise ContainerFormatError(f"tensor '{name}': bad data_offsets {offs!r}")
        begin, end = offs
        dtype = _DTYPE_TAGS[tag]
        count = math.prod(shape)
        if begin < 0 or end > len(buf) or begin > end:
            raise ContainerFormatError(f"tensor '{name}': offsets out of range")
        if end - begin != count * dtype.itemsize:
            raise ContainerFormatError(
                f"tensor '{name}': byte span {end - begin} != "
                f"{count} x {dtype.itemsize}"
            )
        arr = np.frombuffer(buf, dtype=dtype, count=count, offset=begin)
        out[name] = arr.reshape(shape).astype(dtype.newbyteorder("="))
        spans.append((begin, end))

    spans.sort()
    pos = 0
    for begin, end in spans:
        if begin != pos:
            raise ContainerFormatError("data ranges must tile the buffer exactly")
        pos = end
    if pos != len(buf):
        raise ContainerFormatError("trailing bytes after last tensor")
    return out


def flatten(
    tensors: dict[str, np.ndarray], require_finite: bool = True
) -> tuple[np.ndarray, FlattenManifest]:
    """Concatenate all tensors (sorted by name) into one float64 vector."""
    specs = []
    parts = []
    for name in sorted(tensors):
        arr = np.asarray(tensors[name])
        tag = _tag_for(arr, name)
        if require_finite and arr.size and not np.isfinite(arr).all():
            raise NonFiniteParameterError(f"tensor '{name}' contains NaN or Inf")
        specs.append(TensorSpec(name, tag, tuple(arr.shape)))
        parts.append(arr.astype(np.float64, copy=False).ravel())
    flat = np.concatenate(parts) if parts else np.empty(0, dtype=np.float64)
    return flat, FlattenManifest(tuple(specs))


def restore(flat: np.ndarray, manifest: FlattenManifest) -> dict[str, np.ndarray]:
    """Split a flat work vector back into tensors with their stored dtypes."""
    if flat.shape != (manifest.total,):
        raise ValueError(
            f"flat vector has {flat.shape} elements, manifest expects {manifest.total}"
        )
    out: dict[str, np.ndarray] = {}
    for spec, (begin, end) in zip(manifest.specs, manifest.offsets()):
        chunk = flat[begin:end].reshape(spec.shape)
        out[spec.name] = chunk.astype(spec.numpy_dtype.newbyteorder("="))
    return out
