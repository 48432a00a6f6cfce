"""Hot numeric kernels: LCS dynamic programming and blockwise 4-bit codecs.

Each kernel ships in two flavours: a loop body compiled with numba's @njit and
a pure numpy/python fallback. ``SCRIBEKIT_NO_NUMBA=1`` forces the fallback;
missing numba degrades to it silently. ``benchmarks/bench_kernels.py`` times
the two paths against each other.
"""

from __future__ import annotations

import os

import numpy as np

ENV_FLAG = "SCRIBEKIT_NO_NUMBA"

# 16-entry NF4 codebook: standard-normal quantile code points on [-1, 1],
# zero included (bitsandbytes table, float32-rounded values).
NF4_CODEBOOK = np.array(
    [
        -1.0,
        -0.6961928009986877,
        -0.5250730514526367,
        -0.39491748809814453,
        -0.28444138169288635,
        -0.18477343022823334,
        -0.09105003625154495,
        0.0,
        0.07958029955625534,
        0.16093020141124725,
        0.24611230194568634,
        0.33791524171829224,
        0.44070982933044434,
        0.5626170039176941,
        0.7229568362236023,
        1.0,
    ],
    dtype=np.float64,
)

# Midpoints between adjacent code points; values at an exact midpoint take the
# lower index (same rule in both kernel flavours).
_NF4_MIDS = (NF4_CODEBOOK[:-1] + NF4_CODEBOOK[1:]) / 2.0


def _numba_wanted() -> bool:
    if os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes"}:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


# ---------------------------------------------------------------------------
# Longest common subsequence


def _lcs_length_loop(a, b):
    n = b.shape[0]
    prev = np.zeros(n + 1, dtype=np.int64)
    cur = np.zeros(n + 1, dtype=np.int64)
    for i in range(a.shape[0]):
        for j in range(n):
            if a[i] == b[j]:
                cur[j + 1] = prev[j] + 1
            elif prev[j + 1] >= cur[j]:
                cur[j + 1] = prev[j + 1]
            else:
                cur[j + 1] = cur[j]
        prev, cur = cur, prev
    return prev[n]


def _lcs_match_mask_loop(ref, cand):
    # Full DP table, then the standard summary-level ROUGE backtrack: take the
    # diagonal on equality, otherwise move toward the larger cell, preferring
    # the reference side on ties. Returns a 0/1 mask over ref positions.
    m = ref.shape[0]
    n = cand.shape[0]
    table = np.zeros((m + 1, n + 1), dtype=np.int64)
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            if ref[i - 1] == cand[j - 1]:
                table[i, j] = table[i - 1, j - 1] + 1
            elif table[i - 1, j] >= table[i, j - 1]:
                table[i, j] = table[i - 1, j]
            else:
                table[i, j] = table[i, j - 1]
    mask = np.zeros(m, dtype=np.uint8)
    i, j = m, n
    while i > 0 and j > 0:
        if ref[i - 1] == cand[j - 1]:
            mask[i - 1] = 1
            i -= 1
            j -= 1
        elif table[i, j - 1] > table[i - 1, j]:
            j -= 1
        else:
            i -= 1
    return mask


# ---------------------------------------------------------------------------
# Blockwise 4-bit codecs


def _absmax4_encode_loop(values, block_size):
    n = values.shape[0]
    n_blocks = (n + block_size - 1) // block_size
    codes = np.zeros(n, dtype=np.int8)
    scales = np.zeros(n_blocks, dtype=np.float64)
    for b in range(n_blocks):
        lo = b * block_size
        hi = min(lo + block_size, n)
        amax = 0.0
        for i in range(lo, hi):
            v = abs(values[i])
            if v > amax:
                amax = v
        if amax == 0.0:
            continue
        for i in range(lo, hi):
            x = 7.0 * values[i] / amax
            c = np.floor(abs(x) + 0.5)
            if x < 0.0:
                c = -c
            if c > 7.0:
                c = 7.0
            elif c < -7.0:
                c = -7.0
            codes[i] = np.int8(c)
        scales[b] = amax / 7.0
    return codes, scales


def _absmax4_decode_loop(codes, scales, block_size):
    n = codes.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = codes[i] * scales[i // block_size]
    return out


def _nf4_encode_loop(values, block_size, mids):
    n = values.shape[0]
    n_blocks = (n + block_size - 1) // block_size
    codes = np.zeros(n, dtype=np.uint8)
    scales = np.zeros(n_blocks, dtype=np.float64)
    for b in range(n_blocks):
        lo = b * block_size
        hi = min(lo + block_size, n)
        amax = 0.0
        for i in range(lo, hi):
            v = abs(values[i])
            if v > amax:
                amax = v
        if amax == 0.0:
            continue
        scales[b] = amax
        for i in range(lo, hi):
            x = values[i] / amax
            code = 15
            for k in range(15):
                if x <= mids[k]:
                    code = k
                    break
            codes[i] = np.uint8(code)
    return codes, scales


def _nf4_decode_loop(codes, scales, block_size, codebook):
    n = codes.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = codebook[codes[i]] * scales[i // block_size]
    return out


# Vectorized numpy fallbacks (no per-element python loop).


def _block_absmax(values: np.ndarray, block_size: int) -> np.ndarray:
    n = values.shape[0]
    n_blocks = (n + block_size - 1) // block_size
    padded = np.zeros(n_blocks * block_size, dtype=np.float64)
    padded[:n] = np.abs(values)
    return padded.reshape(n_blocks, block_size).max(axis=1)


def _absmax4_encode_np(values, block_size):
    amax = _block_absmax(values, block_size)
    per_value = np.repeat(amax, block_size)[: values.shape[0]]
    # Same elementwise expression as the loop kernel (7*v/amax) so both
    # backends agree bit-for-bit at rounding boundaries.
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(per_value > 0.0, 7.0 * values / per_value, 0.0)
    codes = np.copysign(np.floor(np.abs(x) + 0.5), x)
    codes = np.clip(codes, -7.0, 7.0).astype(np.int8)
    return codes, amax / 7.0


def _absmax4_decode_np(codes, scales, block_size):
    per_value = np.repeat(scales, block_size)[: codes.shape[0]]
    return codes.astype(np.float64) * per_value


def _nf4_encode_np(values, block_size, mids):
    amax = _block_absmax(values, block_size)
    per_value = np.repeat(amax, block_size)[: values.shape[0]]
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(per_value > 0.0, values / per_value, 0.0)
    codes = np.searchsorted(mids, x, side="left").astype(np.uint8)
    codes[per_value == 0.0] = 0
    return codes, amax


def _nf4_decode_np(codes, scales, block_size, codebook):
    per_value = np.repeat(scales, block_size)[: codes.shape[0]]
    return codebook[codes] * per_value


HAS_NUMBA = _numba_wanted()

if HAS_NUMBA:
    from numba import njit

    _jit = njit(cache=True, nogil=True)
    lcs_length_ids = _jit(_lcs_length_loop)
    lcs_match_mask_ids = _jit(_lcs_match_mask_loop)
    absmax4_encode = _jit(_absmax4_encode_loop)
    absmax4_decode = _jit(_absmax4_decode_loop)
    _nf4_encode = _jit(_nf4_encode_loop)
    _nf4_decode = _jit(_nf4_decode_loop)
else:
    lcs_length_ids = _lcs_length_loop
    lcs_match_mask_ids = _lcs_match_mask_loop
    absmax4_encode = _absmax4_encode_np
    absmax4_decode = _absmax4_decode_np
    _nf4_encode = _nf4_encode_np
    _nf4_decode = _nf4_decode_np


def nf4_encode(values: np.ndarray, block_size: int):
    return _nf4_encode(values, block_size, _NF4_MIDS)


def nf4_decode(codes: np.ndarray, scales: np.ndarray, block_size: int):
    return _nf4_decode(codes, scales, block_size, NF4_CODEBOOK)


def backend() -> str:
    """Active kernel backend, ``"numba"`` or ``"numpy"``."""
    return "numba" if HAS_NUMBA else "numpy"
