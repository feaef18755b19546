"""Orthonormal fast Walsh-Hadamard transform, natural (Hadamard) order.

The transform is its own inverse: y = H x / sqrt(n) with H the Sylvester
matrix, H H = n I. Blocks are always a power of two long; the pipeline
guarantees that by construction. Everything runs in float64 regardless of
the checkpoint dtype so quantization error stays far below the integer
rounding step downstream.

Butterflies are computed unnormalized and scaled once by n**-0.5 at the
end, which costs fewer roundings than scaling every stage.
"""

from __future__ import annotations

import numpy as np


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _require_pow2(n: int) -> None:
    if not is_power_of_two(n):
        raise ValueError(f"transform length must be a power of two, got {n}")


def fwht_rows(block: np.ndarray) -> np.ndarray:
    """Transform each row of a (k, n) matrix; returns a new float64 array."""
    if block.ndim != 2:
        raise ValueError("fwht_rows expects a 2-D array")
    k, n = block.shape
    _require_pow2(n)
    out = np.array(block, dtype=np.float64, copy=True, order="C")
    h = 1
    while h < n:
        v = out.reshape(k, n // (2 * h), 2, h)
        x = v[:, :, 0, :]
        y = v[:, :, 1, :]
        t = x - y
        x += y
        y[:] = t
        h *= 2
    if n > 1:
        out *= float(n) ** -0.5
    return out


def fwht(vec: np.ndarray) -> np.ndarray:
    """Orthonormal Walsh-Hadamard transform of a 1-D vector (self-inverse)."""
    arr = np.asarray(vec)
    if arr.ndim != 1:
        raise ValueError("fwht expects a 1-D array")
    return fwht_rows(arr[np.newaxis, :])[0]


def hadamard_matrix(n: int) -> np.ndarray:
    """Unnormalized Sylvester Hadamard matrix of order n (entries +-1).

    Built by explicit block doubling: H_{2m} = [[H_m, H_m], [H_m, -H_m]].
    Quadratic cost; this exists as an independent oracle for the fast
    transform, not for production use.
    """
    _require_pow2(n)
    h = np.ones((1, 1), dtype=np.int64)
    while h.shape[0] < n:
        m = h.shape[0]
        nxt = np.empty((2 * m, 2 * m), dtype=np.int64)
        nxt[:m, :m] = h
        nxt[:m, m:] = h
        nxt[m:, :m] = h
        nxt[m:, m:] = -h
        h = nxt
    return h


def naive_wht(vec: np.ndarray) -> np.ndarray:
    """O(n^2) reference transform via the explicit matrix."""
    arr = np.asarray(vec, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("naive_wht expects a 1-D array")
    n = arr.shape[0]
    out = hadamard_matrix(n).astype(np.float64) @ arr
    if n > 1:
        out *= float(n) ** -0.5
    return out
