# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled logistic-map keystream kernel.

Must stay bit-identical to _chaos_fallback: same IEEE binary64 recurrence,
same truncation. setup.py compiles this with -ffp-contract=off so the
multiply-add chain is not fused into an FMA, which would change the low
bits of the state.
"""

from libc.stdint cimport uint8_t, uint32_t

DEF SCALE = 4294967296.0  # 2**32


def iterate_map(double r, double x0, Py_ssize_t n):
    """Return [x1 .. xn] of x_{i+1} = r * x_i * (1 - x_i)."""
    cdef double x = x0
    cdef Py_ssize_t i
    out = []
    for i in range(n):
        x = r * x * (1.0 - x)
        out.append(x)
    return out


def keystream_bytes(double r, double x0, Py_ssize_t burn_in, Py_ssize_t n):
    """Generate n keystream bytes after discarding burn_in iterations."""
    cdef double x = x0
    cdef double frac
    cdef Py_ssize_t i
    cdef bytearray buf
    cdef uint8_t[::1] out
    if n <= 0:
        return b""
    buf = bytearray(n)
    out = buf
    for i in range(burn_in):
        x = r * x * (1.0 - x)
    for i in range(n):
        x = r * x * (1.0 - x)
        frac = x - <long long>x
        out[i] = <uint8_t>(<uint32_t>(<long long>(frac * SCALE)) & 0xFF)
    return bytes(buf)


def resume_state(double r, double x0, Py_ssize_t iterations):
    """State of the map after `iterations` steps from x0."""
    cdef double x = x0
    cdef Py_ssize_t i
    for i in range(iterations):
        x = r * x * (1.0 - x)
    return x
