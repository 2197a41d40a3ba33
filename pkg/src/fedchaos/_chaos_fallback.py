"""Pure-Python logistic-map keystream generator.

This is the reference implementation the compiled kernel must match byte for
byte. The recurrence runs in plain Python floats (IEEE binary64), one
multiply-chain per iteration, so the compiled variant has to avoid fused
multiply-adds to stay bit-identical.
"""

from __future__ import annotations

SCALE = float(2**32)


def iterate_map(r: float, x0: float, n: int) -> list[float]:
    """Return [x1 .. xn] of x_{i+1} = r * x_i * (1 - x_i)."""
    x = x0
    out = []
    for _ in range(n):
        x = r * x * (1.0 - x)
        out.append(x)
    return out


def keystream_bytes(r: float, x0: float, burn_in: int, n: int) -> bytes:
    """Generate n keystream bytes after discarding burn_in iterations.

    Each byte consumes exactly one map iteration: take the fractional part
    of the state, scale by 2**32, truncate to an integer, keep the low 8
    bits.
    """
    x = x0
    for _ in range(burn_in):
        x = r * x * (1.0 - x)
    out = bytearray(n)
    for i in range(n):
        x = r * x * (1.0 - x)
        frac = x - int(x)
        out[i] = int(frac * SCALE) & 0xFF
    return bytes(out)


def resume_state(r: float, x0: float, iterations: int) -> float:
    """State of the map after `iterations` steps from x0."""
    x = x0
    for _ in range(iterations):
        x = r * x * (1.0 - x)
    return x
