"""Key handling, seed derivation, and the deterministic random stream.

One 256-bit watermark key drives everything. Per-purpose seeds are derived
from it with HMAC-SHA256 under fixed domain-separation labels, and each seed
feeds a counter-based SplitMix64 word stream. The stream is a protocol
constant: embed-time randomness must be reproducible at extraction time on
any platform, forever, so the generator identity is pinned here rather than
borrowed from a library whose internals may drift.

Stream protocol (version 1):
  base    = fold of the four little-endian u64 lanes of the 32-byte seed,
            s_{k+1} = mix64(s_k XOR lane_k), s_0 = 0
  word(i) = mix64(base + (i+1) * 0x9E3779B97F4A7C15)      (i = 0, 1, ...)
  mix64   = the SplitMix64 finalizer (xorshift/multiply chain)

Bounded sampling rejects words above the largest multiple of the bound to
avoid modulo bias; Fisher-Yates consumes one accepted word per swap. A
bound of 1 consumes no words.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

import numpy as np

from .errors import KeyFormatError

KEY_BYTES = 32
PROTOCOL_VERSION = 1

# Canonical purpose labels. derive_seed accepts any non-empty label; these
# four are the ones the protocol and harness use.
LABEL_BLOCK_SHUFFLE = "block-shuffle"
LABEL_PARAM_ASSIGN = "param-assign"
LABEL_BIT_ASSIGN = "bit-assign"
LABEL_ATTACK = "attack"

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB

_U_GAMMA = np.uint64(_GAMMA)
_U_MIX_A = np.uint64(_MIX_A)
_U_MIX_B = np.uint64(_MIX_B)
_U_MAX = np.uint64(_MASK64)
_U_30 = np.uint64(30)
_U_27 = np.uint64(27)
_U_31 = np.uint64(31)
_U_1 = np.uint64(1)


@dataclass(frozen=True)
class WatermarkKey:
    """256 bits of key material; the only secret in the protocol."""

    material: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.material, bytes) or len(self.material) != KEY_BYTES:
            raise KeyFormatError(f"key must be exactly {KEY_BYTES} bytes")
        if self.material == b"\x00" * KEY_BYTES:
            raise KeyFormatError("all-zero key rejected")

    @classmethod
    def from_hex(cls, text: str) -> "WatermarkKey":
        try:
            material = bytes.fromhex(text.strip())
        except ValueError as exc:
            raise KeyFormatError(f"invalid hex key: {exc}") from exc
        return cls(material)

    @classmethod
    def from_file(cls, path: str) -> "WatermarkKey":
        """Read a key file: exactly 32 raw bytes, or 64 hex characters."""
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) == KEY_BYTES:
            return cls(raw)
        text = raw.decode("ascii", errors="replace").strip()
        if len(text) == 2 * KEY_BYTES:
            return cls.from_hex(text)
        raise KeyFormatError(
            f"key file must hold {KEY_BYTES} raw bytes or {2 * KEY_BYTES} hex chars, "
            f"got {len(raw)} bytes"
        )


@dataclass(frozen=True)
class SeedValue:
    """A derived 256-bit seed tagged with the purpose it was derived for."""

    material: bytes
    label: str

    def __post_init__(self) -> None:
        if len(self.material) != KEY_BYTES:
            raise KeyFormatError("seed must be 32 bytes")


def derive_seed(key: WatermarkKey, label: str) -> SeedValue:
    """Derive the per-purpose seed HMAC-SHA256(key, label)."""
    if not label:
        raise KeyFormatError("seed label must be non-empty")
    digest = hmac.new(key.material, label.encode("utf-8"), hashlib.sha256).digest()
    return SeedValue(digest, label)


def derive_subseed(seed: SeedValue, label: str) -> SeedValue:
    """Derive an independent child seed from an existing seed."""
    if not label:
        raise KeyFormatError("seed label must be non-empty")
    digest = hmac.new(seed.material, label.encode("utf-8"), hashlib.sha256).digest()
    return SeedValue(digest, f"{seed.label}/{label}")


def _mix64(z: int) -> int:
    z &= _MASK64
    z ^= z >> 30
    z = (z * _MIX_A) & _MASK64
    z ^= z >> 27
    z = (z * _MIX_B) & _MASK64
    z ^= z >> 31
    return z


def _fold_seed(material: bytes) -> int:
    s = 0
    for k in range(4):
        lane = int.from_bytes(material[8 * k : 8 * k + 8], "little")
        s = _mix64(s ^ lane)
    return s


def _words_block(base: int, start: int, count: int) -> np.ndarray:
    """Vectorized word(start) .. word(start+count-1)."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = np.uint64(base) + idx * _U_GAMMA
    z ^= z >> _U_30
    z *= _U_MIX_A
    z ^= z >> _U_27
    z *= _U_MIX_B
    z ^= z >> _U_31
    return z


def _fy_python(perm: np.ndarray, base: int, pos: int) -> int:
    n = perm.shape[0]
    t = pos
    for i in range(n - 1, 0, -1):
        bound = i + 1
        rem = ((_MASK64 % bound) + 1) % bound
        thr = _MASK64 - rem
        while True:
            w = _mix64(base + ((t + 1) * _GAMMA & _MASK64))
            t += 1
            if w <= thr:
                j = w % bound
                perm[i], perm[j] = perm[j], perm[i]
                break
    return t


try:  # pragma: no cover - exercised indirectly
    import numba

    @numba.njit(cache=True, nogil=True)
    def _fy_numba(perm, base, pos):  # type: ignore[no-redef]
        n = perm.shape[0]
        t = np.uint64(pos)
        one = _U_1
        for i in range(n - 1, 0, -1):
            bound = np.uint64(i + 1)
            rem = (_U_MAX % bound + one) % bound
            thr = _U_MAX - rem
            while True:
                t = t + one
                z = base + t * _U_GAMMA
                z ^= z >> _U_30
                z *= _U_MIX_A
                z ^= z >> _U_27
                z *= _U_MIX_B
                z ^= z >> _U_31
                if z <= thr:
                    j = np.int64(z % bound)
                    tmp = perm[i]
                    perm[i] = perm[j]
                    perm[j] = tmp
                    break
        return np.int64(t)

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover
    _HAVE_NUMBA = False


class RandomStream:
    """Deterministic single-consumer stream of 64-bit uniform words.

    All draws advance a word cursor; the mapping cursor -> word is pure, so
    a stream's entire output is fixed by its SeedValue.
    """

    def __init__(self, seed: SeedValue):
        self.seed = seed
        self._base = _fold_seed(seed.material)
        self._pos = 0

    @property
    def position(self) -> int:
        return self._pos

    def words(self, count: int) -> np.ndarray:
        """Next `count` raw 64-bit words as a uint64 array."""
        if count < 0:
            raise ValueError("count must be >= 0")
        out = _words_block(self._base, self._pos, count)
        self._pos += count
        return out

    def next_word(self) -> int:
        return int(self.words(1)[0])

    def uniforms(self, count: int) -> np.ndarray:
        """Doubles in [0, 1) built from the top 53 bits of each word."""
        w = self.words(count)
        return (w >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)

    def gaussians(self, count: int) -> np.ndarray:
        """Standard normal draws; each consumes exactly two words (Box-Muller)."""
        w = self.words(2 * count)
        u = (w >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        u1 = u[0::2]
        u2 = u[1::2]
        return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)

    def below(self, bound: int) -> int:
        """One unbiased draw from [0, bound) by rejection."""
        if bound < 1:
            raise ValueError("bound must be >= 1")
        if bound == 1:
            return 0
        rem = ((_MASK64 % bound) + 1) % bound
        thr = _MASK64 - rem
        while True:
            w = self.next_word()
            if w <= thr:
                return w % bound

    def below_many(self, bound: int, count: int) -> np.ndarray:
        """`count` unbiased draws from [0, bound), order-preserving."""
        if bound < 1:
            raise ValueError("bound must be >= 1")
        out = np.empty(count, dtype=np.int64)
        if bound == 1:
            out[:] = 0
            return out
        rem = ((_MASK64 % bound) + 1) % bound
        thr = np.uint64(_MASK64 - rem)
        filled = 0
        while filled < count:
            need = count - filled
            chunk = max(need + 8, need + need // 64)
            start = self._pos
            w = _words_block(self._base, start, chunk)
            mask = w <= thr
            ncum = int(mask.sum())
            if ncum >= need:
                # consume exactly up to the word that yields the need-th accept
                hits = np.nonzero(mask)[0]
                last = int(hits[need - 1])
                w = w[: last + 1]
                mask = mask[: last + 1]
                self._pos = start + last + 1
            else:
                self._pos = start + chunk
            acc = w[mask]
            out[filled : filled + acc.size] = (acc % np.uint64(bound)).astype(np.int64)
            filled += acc.size
        return out

    def shuffle(self, arr: np.ndarray) -> None:
        """Seeded Fisher-Yates shuffle, in place."""
        if arr.ndim != 1:
            raise ValueError("shuffle expects a 1-D array")
        if arr.shape[0] < 2:
            return
        if _HAVE_NUMBA and arr.dtype == np.int64:
            self._pos = int(_fy_numba(arr, np.uint64(self._base), self._pos))
        else:
            self._pos = _fy_python(arr, self._base, self._pos)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of [0, n)."""
        perm = np.arange(n, dtype=np.int64)
        self.shuffle(perm)
        return perm

    def sample_distinct(self, count: int, space: int) -> np.ndarray:
        """Ordered sample of `count` distinct values from [0, space)."""
        return DistinctSampler(self, space).take(count)


class DistinctSampler:
    """Resumable without-replacement sampler over [0, space).

    Sequential rejection sampling with a seen-set: draw, skip values
    already taken. Because generation is strictly sequential, the
    concatenation of successive take() calls equals a single take() of the
    total size, and every prefix of the output is itself a uniform sample.
    That prefix stability lets a reader consume a position plan in stages
    (first the length field, then the rest) without knowing the final size
    up front.
    """

    def __init__(self, stream: RandomStream, space: int):
        if space < 1:
            raise ValueError("space must be >= 1")
        self.stream = stream
        self.space = space
        self.seen: set[int] = set()

    @property
    def drawn(self) -> int:
        return len(self.seen)

    def take(self, count: int) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be >= 0")
        if count > self.space - len(self.seen):
            raise ValueError(
                f"cannot draw {count} more values: "
                f"{len(self.seen)} of {self.space} already taken"
            )
        out = np.empty(count, dtype=np.int64)
        if count == 0:
            return out
        stream, space, seen = self.stream, self.space, self.seen
        if space == 1:
            out[0] = 0
            seen.add(0)
            return out
        rem = ((_MASK64 % space) + 1) % space
        thr = np.uint64(_MASK64 - rem)
        filled = 0
        while filled < count:
            need = count - filled
            # expected acceptance falls as the seen-set fills; size chunks
            # for the duplicate rate but cap them near the coupon-collector
            # tail so exhaustive draws stay bounded
            free = 1.0 - len(seen) / space
            est = int(need / max(free, 0.02)) + 8
            chunk = min(max(64, est), max(1024, 2 * space))
            start = stream._pos
            w = _words_block(stream._base, start, chunk)
            mask = w <= thr
            vals = (w[mask] % np.uint64(space)).astype(np.int64)
            hits = np.nonzero(mask)[0]
            consumed = chunk
            for widx, v in zip(hits.tolist(), vals.tolist()):
                if v in seen:
                    continue
                seen.add(v)
                out[filled] = v
                filled += 1
                if filled == count:
                    consumed = int(widx) + 1
                    break
            stream._pos = start + consumed
        return out


def stream(seed: SeedValue) -> RandomStream:
    """Open the deterministic word stream for a derived seed."""
    return RandomStream(seed)
