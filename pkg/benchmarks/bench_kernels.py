#!/usr/bin/env python3
"""Time the numba kernels against the pure numpy/python fallbacks.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from scribekit import _accel


def _time(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    rows = []

    # note-sized LCS: two ~500-token sequences over a small vocabulary
    a = rng.integers(0, 200, size=500).astype(np.int64)
    b = rng.integers(0, 200, size=500).astype(np.int64)
    if _accel.HAS_NUMBA:
        _accel.lcs_length_ids(a[:4], b[:4])  # trigger compile outside the timer
        _accel.lcs_match_mask_ids(a[:4], b[:4])
    rows.append(
        (
            "lcs_length 500x500",
            _time(_accel.lcs_length_ids, a, b, repeats=args.repeats),
            _time(_accel._lcs_length_loop, a, b, repeats=args.repeats),
        )
    )
    rows.append(
        (
            "lcs_match_mask 500x500",
            _time(_accel.lcs_match_mask_ids, a, b, repeats=args.repeats),
            _time(_accel._lcs_match_mask_loop, a, b, repeats=args.repeats),
        )
    )

    # model-sized quantization: 4M values, blocks of 64
    values = rng.standard_normal(4_000_000)
    if _accel.HAS_NUMBA:
        _accel.absmax4_encode(values[:64], 64)
        _accel.nf4_encode(values[:64], 64)
    rows.append(
        (
            "absmax4_encode 4M/64",
            _time(_accel.absmax4_encode, values, 64, repeats=args.repeats),
            _time(_accel._absmax4_encode_np, values, 64, repeats=args.repeats),
        )
    )
    rows.append(
        (
            "nf4_encode 4M/64",
            _time(_accel.nf4_encode, values, 64, repeats=args.repeats),
            _time(_accel._nf4_encode_np, values, 64, _accel._NF4_MIDS, repeats=args.repeats),
        )
    )

    active = _accel.backend()
    fallback_label = "python loop" if active == "numba" else "numpy fallback"
    print(f"active backend: {active}  (fallback column: {fallback_label})")
    print(f"{'kernel':28s} {'active':>12s} {'fallback':>12s} {'speedup':>9s}")
    for name, active_t, fallback_t in rows:
        speedup = fallback_t / active_t if active_t > 0 else float("inf")
        print(f"{name:28s} {active_t * 1e3:10.2f}ms {fallback_t * 1e3:10.2f}ms {speedup:8.1f}x")


if __name__ == "__main__":
    main()
