"""Tests for the logistic-map keystream cipher and parameter sealing."""

import numpy as np
import pytest

from conftest import random_params
from fedchaos import chaos
from fedchaos.chaos import (
    ChaosKey,
    decrypt,
    derive_key,
    encrypt,
    keystream_bytes,
    logistic_iterate,
    open_params,
    seal_params,
    trajectory,
)
from fedchaos.errors import ConfigError, DomainError, IntegrityError
from fedchaos.nn import params_equal
from fedchaos.wire import encode_params

KEY = ChaosKey(r=3.8, x0=0.123456, burn_in=1000)

# first eight keystream bytes for KEY, frozen from the scalar reference
GOLDEN_BYTES = bytes([244, 175, 27, 144, 128, 21, 127, 217])

# first four map iterates from x0=0.2 at r=3.8, computed independently
TRAJECTORY_ORACLE = [
    0.6080000000000001,
    0.9056768,
    0.3246200689786881,
    0.8331191432208476,
]


def test_logistic_iterate_midpoint():
    assert logistic_iterate(0.5, 3.8) == 0.95


def test_logistic_iterate_fixed_endpoints():
    assert logistic_iterate(0.0, 3.8) == 0.0
    assert logistic_iterate(1.0, 3.9) == 0.0


def test_logistic_iterate_domain_errors():
    with pytest.raises(DomainError):
        logistic_iterate(-0.1, 3.8)
    with pytest.raises(DomainError):
        logistic_iterate(1.1, 3.8)
    with pytest.raises(DomainError):
        logistic_iterate(0.5, 4.5)


def test_trajectory_matches_hand_computed_iterates():
    traj = trajectory(3.8, 0.2, 4)
    assert traj.shape == (4,)
    for got, want in zip(traj, TRAJECTORY_ORACLE):
        assert got == pytest.approx(want, abs=1e-15)


def test_trajectory_stays_in_unit_interval():
    traj = trajectory(3.99, 0.123456, 5000, burn_in=100)
    assert np.all(traj >= 0.0)
    assert np.all(traj <= 1.0)


def test_key_validation():
    with pytest.raises(ConfigError):
        ChaosKey(r=3.5, x0=0.2, burn_in=10)  # below chaotic band
    with pytest.raises(ConfigError):
        ChaosKey(r=4.1, x0=0.2, burn_in=10)
    with pytest.raises(ConfigError):
        ChaosKey(r=3.8, x0=0.0, burn_in=10)
    with pytest.raises(ConfigError):
        ChaosKey(r=3.8, x0=1.0, burn_in=10)
    with pytest.raises(ConfigError):
        ChaosKey(r=3.8, x0=0.2, burn_in=-1)
    # the non-zero fixed point x = 1 - 1/r never leaves itself
    with pytest.raises(ConfigError):
        ChaosKey(r=3.8, x0=1.0 - 1.0 / 3.8, burn_in=10)


def test_keystream_golden_vector():
    assert keystream_bytes(KEY, 8) == GOLDEN_BYTES


def test_keystream_deterministic_and_sized():
    a = keystream_bytes(KEY, 64)
    b = keystream_bytes(KEY, 64)
    assert a == b
    assert len(a) == 64
    assert a[:8] == GOLDEN_BYTES


def test_keystream_empty_and_negative():
    assert keystream_bytes(KEY, 0) == b""
    with pytest.raises(DomainError):
        keystream_bytes(KEY, -1)


def test_keystream_prefix_consistency():
    long = keystream_bytes(KEY, 256)
    short = keystream_bytes(KEY, 100)
    assert long[:100] == short


def test_keystream_uses_many_byte_values():
    stream = keystream_bytes(KEY, 65536)
    assert len(set(stream)) == 256


def test_tiny_seed_change_scrambles_stream():
    base = keystream_bytes(KEY, 256)
    nudged = keystream_bytes(ChaosKey(r=3.8, x0=0.123456 + 1e-12, burn_in=1000), 256)
    differing = sum(1 for a, b in zip(base, nudged) if a != b)
    assert differing >= 0.40 * 256


def test_trajectory_divergence_from_nearby_seed():
    a = trajectory(3.8, 0.123456, 100, burn_in=1000)
    b = trajectory(3.8, 0.123456 + 1e-12, 100, burn_in=1000)
    assert np.max(np.abs(a - b)) > 0.1


def test_encrypt_empty_message():
    assert encrypt(b"", KEY).payload == b""
    assert decrypt(encrypt(b"", KEY), KEY) == b""


def test_encrypt_zero_message_reveals_keystream():
    blob = encrypt(bytes(16), KEY)
    assert blob.payload == keystream_bytes(KEY, 16)


def test_encrypt_is_an_involution():
    message = b"attack at dawn, bring snacks"
    once = encrypt(message, KEY)
    twice = encrypt(once.payload, KEY)
    assert twice.payload == message


def test_roundtrip_random_payloads():
    rng = np.random.default_rng(77)
    for length in [0, 1, 2, 7, 64, 1000, 4096]:
        payload = rng.integers(0, 256, size=length, dtype=np.uint8).tobytes()
        assert decrypt(encrypt(payload, KEY), KEY) == payload


def test_wrong_key_fails_to_decrypt():
    message = b"0123456789abcdef" * 8
    blob = encrypt(message, KEY)
    near_miss = ChaosKey(r=3.8, x0=0.123456 + 1e-9, burn_in=1000)
    assert decrypt(blob, near_miss) != message


def test_ciphertext_differs_from_plaintext():
    message = bytes(range(256))
    blob = encrypt(message, KEY)
    assert blob.payload != message
    assert blob.length == 256


def test_seal_open_roundtrip():
    rng = np.random.default_rng(5)
    params = random_params((6, 8, 4, 1), rng)
    blob = seal_params(params, KEY)
    assert blob.length == len(encode_params(params))
    restored = open_params(blob, KEY, expected_shapes=params.shapes())
    assert params_equal(params, restored)


def test_open_with_wrong_key_raises():
    rng = np.random.default_rng(6)
    params = random_params((4, 4, 1), rng)
    blob = seal_params(params, KEY)
    other = ChaosKey(r=3.8, x0=0.654321, burn_in=1000)
    with pytest.raises(IntegrityError):
        open_params(blob, other, expected_shapes=params.shapes())


def test_open_with_wrong_shapes_raises():
    rng = np.random.default_rng(7)
    params = random_params((4, 4, 1), rng)
    blob = seal_params(params, KEY)
    with pytest.raises(IntegrityError):
        open_params(blob, KEY, expected_shapes=[(4, 5), (5, 1)])


def test_open_truncated_blob_raises():
    rng = np.random.default_rng(8)
    params = random_params((4, 4, 1), rng)
    blob = seal_params(params, KEY)
    clipped = chaos.CipherBlob(payload=blob.payload[:-3])
    with pytest.raises(IntegrityError):
        open_params(clipped, KEY, expected_shapes=params.shapes())


def test_derive_key_is_deterministic_and_distinct():
    k1 = derive_key(42, 0)
    k2 = derive_key(42, 0)
    k3 = derive_key(42, 1)
    assert k1 == k2
    assert k1 != k3
    assert 0.0 < k1.x0 < 1.0
    assert k1.r == chaos.DEFAULT_R
    assert k1.burn_in == chaos.DEFAULT_BURN_IN


def test_backend_reports_a_known_name():
    assert chaos.keystream_backend() in ("compiled", "fallback")


def test_fallback_matches_active_backend():
    """The pure scalar reference and whichever kernel is live must agree."""
    from fedchaos import _chaos_fallback

    want = bytes(_chaos_fallback.keystream_bytes(3.8, 0.123456, 1000, 10000))
    got = keystream_bytes(KEY, 10000)
    assert got == want


def test_fallback_trajectory_matches_active_backend():
    from fedchaos import _chaos_fallback

    want = _chaos_fallback.iterate_map(3.8, 0.2, 50)
    got = trajectory(3.8, 0.2, 50)
    assert np.array_equal(got, np.asarray(want))
