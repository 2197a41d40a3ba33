"""Logistic-map keystream cipher.

The map x_{i+1} = r*x*(1-x) is chaotic for r in [3.57, 4]; a key is the
pair (r, x0) plus a burn-in count of discarded iterations. One map
iteration yields one keystream byte (the low 8 bits of floor(frac(x) *
2**32)), and encryption is a plain XOR, so the cipher is an involution and
bit-lossless on any payload.

The iteration loop lives in a compiled kernel when the extension built,
with a pure-Python twin as fallback; both produce identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, IntegrityError, FormatError
from .nn import ModelParams
from . import wire

try:
    from . import _chaoskernel as _kernel

    KERNEL_BACKEND = "compiled"
except ImportError:
    from . import _chaos_fallback as _kernel

    KERNEL_BACKEND = "fallback"

CHAOTIC_R_MIN = 3.57
CHAOTIC_R_MAX = 4.0
DEFAULT_R = 3.8
DEFAULT_BURN_IN = 1000


def keystream_backend() -> str:
    """'compiled' when the C extension loaded, else 'fallback'."""
    return KERNEL_BACKEND


@dataclass(frozen=True)
class ChaosKey:
    """Cipher key: control parameter, initial condition, burn-in count."""

    r: float = DEFAULT_R
    x0: float = 0.123456
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        if not CHAOTIC_R_MIN <= self.r <= CHAOTIC_R_MAX:
            raise ConfigError(
                f"key.r={self.r}: outside the chaotic range [{CHAOTIC_R_MIN}, {CHAOTIC_R_MAX}]"
            )
        if not 0.0 < self.x0 < 1.0:
            raise ConfigError(f"key.x0={self.x0}: must lie in the open interval (0, 1)")
        if self.x0 == 1.0 - 1.0 / self.r:
            raise ConfigError(f"key.x0={self.x0}: fixed point of the map, orbit never moves")
        if self.burn_in < 0:
            raise ConfigError(f"key.burn_in={self.burn_in}: must be >= 0")


@dataclass(frozen=True)
class CipherBlob:
    payload: bytes

    @property
    def length(self) -> int:
        return len(self.payload)


def logistic_iterate(x: float, r: float) -> float:
    """One map step r*x*(1-x); domain-checked."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x}: must lie in [0, 1]")
    if not 0.0 <= r <= 4.0:
        raise DomainError(f"r={r}: must lie in [0, 4]")
    return r * x * (1.0 - x)


def trajectory(r: float, x0: float, n: int, burn_in: int = 0) -> np.ndarray:
    """n successive map values starting after burn_in discarded iterations."""
    if not 0.0 <= x0 <= 1.0:
        raise DomainError(f"x0={x0}: must lie in [0, 1]")
    if not 0.0 <= r <= 4.0:
        raise DomainError(f"r={r}: must lie in [0, 4]")
    if n < 0 or burn_in < 0:
        raise DomainError("n and burn_in must be >= 0")
    x = _kernel.resume_state(r, x0, burn_in) if burn_in else x0
    return np.array(_kernel.iterate_map(r, x, n), dtype=np.float64)


def keystream_bytes(key: ChaosKey, n: int) -> bytes:
    """n deterministic keystream bytes for the key; n=0 gives b''."""
    if n < 0:
        raise DomainError(f"n={n}: must be >= 0")
    return _kernel.keystream_bytes(key.r, key.x0, key.burn_in, n)


def encrypt(plain: bytes, key: ChaosKey) -> CipherBlob:
    stream = keystream_bytes(key, len(plain))
    mixed = np.frombuffer(plain, dtype=np.uint8) ^ np.frombuffer(stream, dtype=np.uint8)
    return CipherBlob(mixed.tobytes())


def decrypt(cipher: CipherBlob | bytes, key: ChaosKey) -> bytes:
    payload = cipher.payload if isinstance(cipher, CipherBlob) else bytes(cipher)
    return encrypt(payload, key).payload


def seal_params(params: ModelParams, key: ChaosKey) -> CipherBlob:
    """Serialize to the canonical wire format, then encrypt (header included)."""
    return encrypt(wire.encode_params(params), key)


def open_params(
    blob: CipherBlob | bytes, key: ChaosKey, expected_shapes: list[tuple[int, int]]
) -> ModelParams:
    """Decrypt and deserialize, checking length and shapes against expectations.

    A wrong key scrambles the header, so parse failures surface as
    IntegrityError rather than a plain format error.
    """
    payload = blob.payload if isinstance(blob, CipherBlob) else bytes(blob)
    shapes = [tuple(s) for s in expected_shapes]
    if len(payload) != wire.params_wire_size(shapes):
        raise IntegrityError(
            f"sealed payload is {len(payload)} bytes, expected {wire.params_wire_size(shapes)}"
        )
    plain = decrypt(payload, key)
    try:
        return wire.decode_params(plain, expected_shapes=shapes)
    except FormatError as e:
        raise IntegrityError(f"decrypted payload failed to parse (wrong key?): {e}") from e


def derive_key(
    seed: int, *ids: int, r: float = DEFAULT_R, burn_in: int = DEFAULT_BURN_IN
) -> ChaosKey:
    """Deterministic key for a run seed and a party (or pair of parties).

    Only x0 varies between derivations; r and burn_in are shared cipher
    parameters. The fixed-point redraw is a probability-zero guard that
    keeps the constructor's invariant unconditional.
    """
    ss = np.random.SeedSequence(entropy=(int(seed) & (2**64 - 1), 3, *(int(i) for i in ids)))
    rng = np.random.default_rng(ss)
    x0 = float(rng.uniform(0.0, 1.0))
    while not 0.0 < x0 < 1.0 or x0 == 1.0 - 1.0 / r:
        x0 = float(rng.uniform(0.0, 1.0))
    return ChaosKey(r=r, x0=x0, burn_in=burn_in)
