"""End-to-end watermark pipeline: frame, embed, extract, verify.

Embedding: flatten the checkpoint, permute it into the key-controlled work
order, transform each block, scale coefficients to integers with a
per-block exponent, write the framed message into key-chosen low bits of
the integer magnitudes, then run every step backwards. Extraction repeats
the forward steps and reads instead of writes; the framing (length field
up front, digest at the end) makes verification self-contained, so the
verifier needs only the model, the key, and the protocol parameters.

The per-block exponent is recomputed by the extractor from the
*watermarked* coefficients, so embedding iterates integerize/hide until
the exponent is a fixed point of that recomputation; a block that refuses
to settle aborts the embed rather than emitting an unverifiable model.

Bit semantics are sign-magnitude: hidden bits live in the low bits of the
integer's absolute value and the sign is reapplied afterwards, so the
pattern never depends on a machine's negative-number representation. A
zero coefficient that receives a set bit becomes positive.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, replace

import numpy as np

from .codec import (
    MAX_STABILIZE_ITERS,
    deintegerize_rows,
    integerize_rows,
    select_exponent_rows,
)
from .container import FlattenManifest, TensorSpec, flatten, restore
from .errors import CapacityExceededError, ExponentConvergenceError
from .fwht import fwht_rows
from .keys import LABEL_BIT_ASSIGN, WatermarkKey, derive_seed
from .layout import BlockLayout, build_layout
from .plan import FRAME_OVERHEAD_BITS, HidingPlan, PlanBuilder, capacity

LENGTH_FIELD_BITS = 32
HASH_BITS = 256

assert LENGTH_FIELD_BITS + HASH_BITS == FRAME_OVERHEAD_BITS


@dataclass(frozen=True)
class WatermarkConfig:
    """Protocol parameters; embed and extract must agree on every field."""

    l: int = 4
    s_target: int = 5
    max_block: int = 2048
    protocol_version: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.l <= 8:
            raise ValueError(f"l must be in [1, 8], got {self.l}")
        if not 2 <= self.s_target <= 10:
            raise ValueError(f"s_target must be in [2, 10], got {self.s_target}")
        if self.max_block < 1 or self.max_block & (self.max_block - 1):
            raise ValueError(f"max_block must be a power of two, got {self.max_block}")
        if self.protocol_version != 1:
            raise ValueError(f"unknown protocol version {self.protocol_version}")

    def to_dict(self) -> dict:
        return {
            "l": self.l,
            "s_target": self.s_target,
            "max_block": self.max_block,
            "protocol_version": self.protocol_version,
        }


@dataclass(frozen=True)
class Bitstream:
    """A framed message as an array of 0/1 bit values."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        if self.bits.dtype != np.uint8:
            raise TypeError("bits must be uint8")

    def __len__(self) -> int:
        return self.bits.shape[0]


def frame_payload(payload: bytes) -> Bitstream:
    """Frame payload bytes: 32-bit LE length, payload, 256-bit digest.

    Bits are MSB-first within each byte. The digest covers length+payload,
    so a correct extraction can be recognized with no external state.
    """
    if len(payload) >= 1 << 32:
        raise ValueError("payload too large for 32-bit length field")
    head = struct.pack("<I", len(payload))
    digest = hashlib.sha256(head + payload).digest()
    raw = np.frombuffer(head + payload + digest, dtype=np.uint8)
    return Bitstream(np.unpackbits(raw))


def ber(a: Bitstream, b: Bitstream) -> float:
    """Bit error ratio between two equal-length bitstreams."""
    if len(a) != len(b):
        raise ValueError(f"bitstream lengths differ: {len(a)} vs {len(b)}")
    if len(a) == 0:
        return 0.0
    return float(np.mean(a.bits != b.bits))


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of an extraction attempt."""

    verified: bool
    payload: bytes | None
    ber: float | None
    hidden_bit_count: int
    config: WatermarkConfig
    diagnostic: str | None = None

    def to_dict(self) -> dict:
        return {
            "verified": self.verified,
            "payload_hex": self.payload.hex() if self.payload is not None else None,
            "ber": self.ber,
            "hidden_bit_count": self.hidden_bit_count,
            "config": self.config.to_dict(),
            "diagnostic": self.diagnostic,
        }


@dataclass(frozen=True)
class EmbedResult:
    """Watermarked tensors plus the geometry the distortion tests audit."""

    tensors: dict[str, np.ndarray]
    frame: Bitstream
    layout: BlockLayout
    d_by_block: np.ndarray


def _apply_bits(ints: np.ndarray, clear: np.ndarray, setb: np.ndarray) -> np.ndarray:
    """Write hidden bits into integer magnitudes, sign reapplied."""
    mag = np.abs(ints)
    mag = (mag & ~clear) | setb
    return np.where(ints < 0, -mag, mag)


def _block_index_groups(layout: BlockLayout) -> dict[int, np.ndarray]:
    sizes = np.asarray(layout.sizes, dtype=np.int64)
    return {
        size: np.nonzero(sizes == size)[0]
        for size in sorted(set(layout.sizes), reverse=True)
    }


def _gather_rows(vec: np.ndarray, starts: np.ndarray, size: int) -> np.ndarray:
    idx = starts[:, None] + np.arange(size, dtype=np.int64)[None, :]
    return vec[idx], idx


def embed_details(
    tensors: dict[str, np.ndarray],
    key: WatermarkKey,
    payload: bytes,
    cfg: WatermarkConfig = WatermarkConfig(),
) -> EmbedResult:
    """Embed and return the watermarked tensors with audit details."""
    frame = frame_payload(payload)
    flat, manifest = flatten(tensors)
    n_p = int(flat.size)
    if len(frame) > capacity(n_p, cfg.l):
        raise CapacityExceededError(
            f"framed message needs {len(frame)} bits but capacity is "
            f"{capacity(n_p, cfg.l)} ({n_p} params x {cfg.l} bits)"
        )
    layout = build_layout(key, n_p, cfg.max_block)
    plan_builder = PlanBuilder(n_p, cfg.l, derive_seed(key, LABEL_BIT_ASSIGN))
    plan_builder.take(len(frame))
    plan = plan_builder.plan()

    # bit writes as global per-coefficient masks; bitwise_or.at keeps
    # multiple bits landing on one coefficient from clobbering each other
    clear_mask = np.zeros(n_p, dtype=np.int64)
    set_mask = np.zeros(n_p, dtype=np.int64)
    shifts = np.left_shift(np.int64(1), plan.bit_index)
    np.bitwise_or.at(clear_mask, plan.coeff_index, shifts)
    np.bitwise_or.at(
        set_mask, plan.coeff_index, shifts * frame.bits.astype(np.int64)
    )

    work = layout.gather(flat)
    new_work = np.empty_like(work)
    d_by_block = np.zeros(layout.block_count, dtype=np.int64)
    for size, block_ids in _block_index_groups(layout).items():
        starts = layout.starts()[block_ids]
        rows, idx = _gather_rows(work, starts, size)
        coeffs = fwht_rows(rows)
        cm = clear_mask[idx]
        sm = set_mask[idx]
        d = select_exponent_rows(coeffs, cfg.s_target)
        hidden = None
        for _ in range(MAX_STABILIZE_ITERS):
            ints = _apply_bits(integerize_rows(coeffs, d), cm, sm)
            hidden = deintegerize_rows(ints, d)
            d_next = select_exponent_rows(hidden, cfg.s_target)
            if np.array_equal(d_next, d):
                break
            d = d_next
        else:
            bad = block_ids[select_exponent_rows(hidden, cfg.s_target) != d]
            raise ExponentConvergenceError(
                f"exponent did not stabilize for block(s) {bad.tolist()[:8]}"
            )
        d_by_block[block_ids] = d
        new_work[idx] = fwht_rows(hidden)

    new_flat = layout.scatter(new_work)
    promoted = FlattenManifest(
        tuple(TensorSpec(s.name, "F64", s.shape) for s in manifest.specs)
    )
    return EmbedResult(
        tensors=restore(new_flat, promoted),
        frame=frame,
        layout=layout,
        d_by_block=d_by_block,
    )


def embed(
    tensors: dict[str, np.ndarray],
    key: WatermarkKey,
    payload: bytes,
    cfg: WatermarkConfig = WatermarkConfig(),
) -> dict[str, np.ndarray]:
    """Watermark a checkpoint; output tensors are float64 (see module doc)."""
    return embed_details(tensors, key, payload, cfg).tensors


def _integerize_work(
    work: np.ndarray, layout: BlockLayout, s_target: int
) -> np.ndarray:
    """Transform + integerize every block; returns work-length int64 array."""
    ints = np.empty(work.shape[0], dtype=np.int64)
    for size, block_ids in _block_index_groups(layout).items():
        starts = layout.starts()[block_ids]
        rows, idx = _gather_rows(work, starts, size)
        coeffs = fwht_rows(rows)
        d = select_exponent_rows(coeffs, s_target)
        ints[idx] = integerize_rows(coeffs, d)
    return ints


def _read_bits(ints: np.ndarray, plan: HidingPlan) -> np.ndarray:
    vals = np.abs(ints[plan.coeff_index])
    return ((vals >> plan.bit_index) & 1).astype(np.uint8)


def _bits_to_bytes(bits: np.ndarray) -> bytes:
    return np.packbits(bits).tobytes()


def extract(
    tensors: dict[str, np.ndarray],
    key: WatermarkKey,
    cfg: WatermarkConfig = WatermarkConfig(),
    reference: Bitstream | None = None,
) -> VerificationReport:
    """Recover the hidden message and check its digest.

    Never raises on tampered content: implausible structure comes back as
    verified=False with a diagnostic. If a reference bitstream is given,
    the same number of bits is read from the model and compared, which is
    how the harness measures bit error ratios regardless of whether the
    frame survived.
    """
    flat, _ = flatten(tensors, require_finite=False)
    n_p = int(flat.size)
    cap = capacity(n_p, cfg.l)
    if n_p == 0 or cap < LENGTH_FIELD_BITS:
        return VerificationReport(
            False, None, None, 0, cfg, "model too small to hold a frame"
        )
    if not np.isfinite(flat).all():
        return VerificationReport(
            False, None, None, 0, cfg, "non-finite parameters"
        )

    layout = build_layout(key, n_p, cfg.max_block)
    ints = _integerize_work(layout.gather(flat), layout, cfg.s_target)
    builder = PlanBuilder(n_p, cfg.l, derive_seed(key, LABEL_BIT_ASSIGN))

    builder.take(LENGTH_FIELD_BITS)
    head_bits = _read_bits(ints, builder.plan())
    (length,) = struct.unpack("<I", _bits_to_bytes(head_bits))
    total_bits = LENGTH_FIELD_BITS + 8 * length + HASH_BITS

    want = total_bits if total_bits <= cap else LENGTH_FIELD_BITS
    if reference is not None:
        want = max(want, min(len(reference), cap))
    builder.take(want - LENGTH_FIELD_BITS)
    bits = _read_bits(ints, builder.plan())

    ref_ber: float | None = None
    if reference is not None:
        n = min(len(reference), cap)
        ref_ber = (
            float(np.mean(bits[:n] != reference.bits[:n])) if n else 0.0
        )

    if total_bits > cap:
        return VerificationReport(
            False,
            None,
            ref_ber,
            LENGTH_FIELD_BITS,
            cfg,
            f"length field {length} implies {total_bits} bits > capacity {cap}",
        )

    body = _bits_to_bytes(bits[:total_bits])
    head, payload, digest = body[:4], body[4 : 4 + length], body[4 + length :]
    verified = hashlib.sha256(head + payload).digest() == digest
    return VerificationReport(
        verified,
        payload,
        ref_ber,
        total_bits,
        cfg,
        None if verified else "digest mismatch",
    )


def verify(
    tensors: dict[str, np.ndarray],
    key: WatermarkKey,
    cfg: WatermarkConfig = WatermarkConfig(),
) -> bool:
    """True when the hidden frame's digest checks out under this key."""
    return extract(tensors, key, cfg).verified


def watermarked_copy_config(cfg: WatermarkConfig, **overrides) -> WatermarkConfig:
    """Config with selected fields replaced (convenience for harness code)."""
    return replace(cfg, **overrides)
