"""Throughput of the keystream kernel: compiled extension vs pure Python.

The keystream loop is the one serial hot path in the package (one map
iteration per output byte, no way to vectorize across the recurrence), so
it is the only piece with a compiled variant. Both implementations must
produce identical bytes; this script checks that before timing.

    python benchmarks/bench_keystream.py --bytes 1000000 --repeat 3
"""

from __future__ import annotations

import argparse
import time

from fedchaos import _chaos_fallback

try:
    from fedchaos import _chaoskernel
except ImportError:
    _chaoskernel = None

R, X0, BURN_IN = 3.8, 0.123456, 1000


def time_backend(fn, n: int, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(R, X0, BURN_IN, n)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--bytes", type=int, default=1_000_000, dest="n")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    t_py = time_backend(_chaos_fallback.keystream_bytes, args.n, args.repeat)
    print(f"fallback : {args.n} bytes in {t_py:.3f} s  ({args.n / t_py / 1e6:.2f} MB/s)")

    if _chaoskernel is None:
        print("compiled : extension not built (install ran without a C toolchain?)")
        return 0

    sample = 65536
    if _chaoskernel.keystream_bytes(R, X0, BURN_IN, sample) != _chaos_fallback.keystream_bytes(
        R, X0, BURN_IN, sample
    ):
        raise SystemExit("backends disagree; refusing to benchmark")

    t_c = time_backend(_chaoskernel.keystream_bytes, args.n, args.repeat)
    print(f"compiled : {args.n} bytes in {t_c:.3f} s  ({args.n / t_c / 1e6:.2f} MB/s)")
    print(f"speedup  : {t_py / t_c:.1f}x (outputs verified identical on {sample} bytes)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
