"""Acceptance gate: one test per headline guarantee of the package.

Each test prints a single PASS or FAIL line (written past the capture so it
also shows up under plain `pytest -v`). Expensive federated runs are shared
between criteria through module-level caches, and the wall time of each
cached family is tracked so the runtime bounds can be asserted no matter
which test triggered the computation.
"""

import functools
import time
from collections import defaultdict

import numpy as np

from conftest import make_params, random_params
from fedchaos.chaos import ChaosKey, decrypt, encrypt, keystream_bytes, open_params, seal_params, trajectory
from fedchaos.data import (
    ForcedSmall,
    MissingFeatureSpec,
    PartitionSpec,
    prepare_participants,
)
from fedchaos.datasets import load_breast_cancer_dataset
from fedchaos.dp import DpConfig, clip_gradient, dp_sgd_step
from fedchaos.federation import (
    CipherMode,
    DpMode,
    FederationConfig,
    PlainMode,
    run_federation,
)
from fedchaos.metrics import COLUMNS, build_table
from fedchaos.nn import (
    NetworkConfig,
    PerExampleGrads,
    bce_loss,
    backward,
    forward,
    global_l2_norm,
    params_equal,
    per_example_backward,
    sgd_step,
)

SEEDS = (1, 2, 3, 4, 5)
LAYERS = (30, 64, 32, 16, 8, 1)
MASKED_FEATURE = "worst concave points"
MASKED_PARTICIPANT = 4

_elapsed = defaultdict(float)

# one line per criterion; conftest echoes these in the terminal summary
CRITERION_LINES: list[str] = []


def criterion(number, summary):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                line = f"FAIL criterion {number}: {summary}"
                CRITERION_LINES.append(line)
                print(line)
                raise
            line = f"PASS criterion {number}: {summary}"
            CRITERION_LINES.append(line)
            print(line)

        return wrapper

    return deco


@functools.lru_cache(maxsize=None)
def _dataset():
    return load_breast_cancer_dataset()


def _federate(seed, mode, spec, bucket):
    start = time.perf_counter()
    parts = prepare_participants(_dataset(), spec, 5)
    config = FederationConfig(
        network=NetworkConfig(layer_sizes=LAYERS, seed=seed), mode=mode, seed=seed
    )
    result = run_federation(config, parts)
    _elapsed[bucket] += time.perf_counter() - start
    return result


@functools.lru_cache(maxsize=None)
def plain_even(seed):
    return _federate(seed, PlainMode(), PartitionSpec(seed=seed), "plain_even")


@functools.lru_cache(maxsize=None)
def dp_even(seed):
    return _federate(seed, DpMode(), PartitionSpec(seed=seed), "dp_even")


@functools.lru_cache(maxsize=None)
def chaos_even(seed):
    return _federate(seed, CipherMode(), PartitionSpec(seed=seed), "chaos_even")


@functools.lru_cache(maxsize=None)
def plain_imputed(seed):
    spec = PartitionSpec(
        seed=seed,
        missing_feature=MissingFeatureSpec(
            participant_id=MASKED_PARTICIPANT, feature_name=MASKED_FEATURE
        ),
    )
    return _federate(seed, PlainMode(), spec, "plain_imputed")


@functools.lru_cache(maxsize=None)
def plain_forced_small(seed):
    spec = PartitionSpec(seed=seed, mode=ForcedSmall(n_small=2, cap=0.10))
    return _federate(seed, PlainMode(), spec, "plain_forced_small")


def mean_acc(result, phase):
    return float(np.mean([getattr(o, phase).accuracy for o in result.outcomes]))


@criterion(1, "cipher roundtrip is bit-exact on 1000 random payloads in < 5 s")
def test_criterion_1_cipher_correctness():
    key = ChaosKey(r=3.8, x0=0.123456, burn_in=1000)
    rng = np.random.default_rng(1001)
    start = time.perf_counter()
    for _ in range(1000):
        length = int(rng.integers(0, 4097))
        payload = rng.integers(0, 256, size=length, dtype=np.uint8).tobytes()
        assert decrypt(encrypt(payload, key), key) == payload
    params = random_params(LAYERS, rng)
    restored = open_params(seal_params(params, key), key, params.shapes())
    assert params_equal(params, restored)
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"cipher criterion took {elapsed:.2f} s"


@criterion(2, "nearby seeds diverge > 0.1 and keystream bytes are near-uniform")
def test_criterion_2_chaos_properties():
    a = trajectory(3.8, 0.123456, 100, burn_in=1000)
    b = trajectory(3.8, 0.123456 + 1e-12, 100, burn_in=1000)
    assert np.max(np.abs(a - b)) > 0.1

    key = ChaosKey(r=3.8, x0=0.123456, burn_in=1000)
    stream = np.frombuffer(keystream_bytes(key, 1_000_000), dtype=np.uint8)
    counts = np.bincount(stream, minlength=256)
    expected = 1_000_000 / 256
    assert counts.min() >= 0.8 * expected, f"rarest byte {counts.min()} vs {expected}"
    assert counts.max() <= 1.2 * expected, f"commonest byte {counts.max()} vs {expected}"


@criterion(3, "backprop matches finite differences (rel err < 1e-5, 20 nets) in < 10 s")
def test_criterion_3_gradient_oracle():
    start = time.perf_counter()
    h = 1e-5
    shape_rng = np.random.default_rng(33)
    worst = 0.0
    for _ in range(20):
        depth = int(shape_rng.integers(1, 4))
        sizes = (
            int(shape_rng.integers(1, 6)),
            *(int(shape_rng.integers(2, 9)) for _ in range(depth)),
            1,
        )
        batch = int(shape_rng.integers(1, 5))
        params = random_params(sizes, shape_rng)
        inputs = shape_rng.normal(size=(batch, sizes[0]))
        labels = shape_rng.integers(0, 2, size=batch).astype(np.float64)

        _, cache = forward(params, inputs)
        grads = backward(params, cache, inputs, labels)
        for li, layer in enumerate(params.layers):
            for arr_name in ("weights", "bias"):
                flat = getattr(layer, arr_name).reshape(-1)
                gflat = getattr(grads.layers[li], arr_name).reshape(-1)
                for idx in range(flat.size):
                    orig = flat[idx]
                    flat[idx] = orig + h
                    loss_up = bce_loss(forward(params, inputs)[0], labels)
                    flat[idx] = orig - h
                    loss_down = bce_loss(forward(params, inputs)[0], labels)
                    flat[idx] = orig
                    fd = (loss_up - loss_down) / (2.0 * h)
                    denom = max(abs(gflat[idx]), abs(fd), 1e-6)
                    worst = max(worst, abs(gflat[idx] - fd) / denom)
    elapsed = time.perf_counter() - start
    assert worst < 1e-5, f"worst relative error {worst}"
    assert elapsed < 10.0, f"gradient criterion took {elapsed:.2f} s"


@criterion(4, "clipping bounds norms; noiseless DP-SGD matches SGD; noise std within 5%")
def test_criterion_4_dp_mechanics():
    rng = np.random.default_rng(44)
    bound = 2.0
    for _ in range(1000):
        grad = random_params((3, 4, 1), rng)
        assert global_l2_norm(clip_gradient(grad, bound)) <= bound + 1e-12

    # sigma = 0 with active clipping reduces to SGD on the mean clipped gradient
    params = random_params((4, 6, 1), rng)
    inputs = rng.normal(size=(8, 4)) * 3.0
    labels = rng.integers(0, 2, size=8).astype(np.float64)
    per = per_example_backward(params, inputs, labels)
    config = DpConfig(clip_norm=0.05, noise_scale=0.0, lot_size=8)
    stepped = dp_sgd_step(params, per, config, 0.1, np.random.default_rng(0))

    clipped = [clip_gradient(per[i], config.clip_norm) for i in range(len(per))]
    mean_grad = make_params(
        [
            (
                np.mean([c.layers[li].weights for c in clipped], axis=0),
                np.mean([c.layers[li].bias for c in clipped], axis=0),
            )
            for li in range(len(params.layers))
        ]
    )
    manual = sgd_step(params, mean_grad, 0.1)
    for a, b in zip(stepped.layers, manual.layers):
        assert np.max(np.abs(a.weights - b.weights)) <= 1e-12
        assert np.max(np.abs(a.bias - b.bias)) <= 1e-12

    # injected-noise law on a one-weight model, recovered from the updates
    lot, sigma, clip = 2, 1.0, 3.0
    noise_config = DpConfig(clip_norm=clip, noise_scale=sigma, lot_size=lot)
    zero_params = make_params([([[0.0]], [0.0])])
    zero_per = PerExampleGrads(
        weight_stacks=[np.zeros((lot, 1, 1))], bias_stacks=[np.zeros((lot, 1))]
    )
    noise_rng = np.random.default_rng(4242)
    lr = 0.5
    draws = np.empty(10000)
    for i in range(draws.size):
        out = dp_sgd_step(zero_params, zero_per, noise_config, lr, noise_rng)
        draws[i] = -out.layers[0].weights[0, 0] / lr
    want_std = sigma * clip / lot
    assert abs(np.std(draws) - want_std) <= 0.05 * want_std


@criterion(5, "weighted averaging matches scalar recomputation within 1e-12")
def test_criterion_5_fedavg_oracle():
    from fedchaos.federation import fed_avg
    from fedchaos.nn import params_allclose

    rng = np.random.default_rng(55)
    updates = [(random_params((5, 7, 1), rng), int(w)) for w in (3, 14, 8, 25)]
    avg = fed_avg(updates)
    total = sum(w for _, w in updates)
    for li in range(len(avg.layers)):
        for arr_name in ("weights", "bias"):
            flat_avg = getattr(avg.layers[li], arr_name).reshape(-1)
            stacks = [getattr(p.layers[li], arr_name).reshape(-1) for p, _ in updates]
            for idx in range(flat_avg.size):
                want = sum(w * s[idx] for (_, w), s in zip(updates, stacks)) / total
                assert abs(flat_avg[idx] - want) <= 1e-12

    same = updates[0][0]
    assert params_allclose(fed_avg([(same, 2), (same.copy(), 11)]), same, atol=1e-15)
    assert params_allclose(fed_avg(list(reversed(updates))), avg, atol=1e-12)


@criterion(6, "cipher-mode federation is bit-identical to plain mode")
def test_criterion_6_plain_chaos_equivalence():
    plain = plain_even(1)
    sealed = chaos_even(1)
    assert plain.outcomes == sealed.outcomes
    assert plain.history == sealed.history
    assert params_equal(plain.final_params, sealed.final_params)
    # and the whole pipeline is replayable
    assert plain == _federate(1, PlainMode(), PartitionSpec(seed=1), "replay")


@criterion(7, "even split, 5 seeds: post-FL mean >= pre-FL mean and >= 0.93, < 3 min")
def test_criterion_7_even_split_improvement():
    pre = np.mean([mean_acc(plain_even(s), "pre") for s in SEEDS])
    post = np.mean([mean_acc(plain_even(s), "post") for s in SEEDS])
    assert post >= pre, f"post {post:.4f} < pre {pre:.4f}"
    assert post >= 0.93, f"post {post:.4f} < 0.93"
    assert _elapsed["plain_even"] < 180.0, f"took {_elapsed['plain_even']:.1f} s"


@criterion(8, "DP mode: >= 4/5 seeds improve and stay within 0.07 of plain post-FL")
def test_criterion_8_dp_utility():
    improved = 0
    for s in SEEDS:
        result = dp_even(s)
        pre, post = mean_acc(result, "pre"), mean_acc(result, "post")
        improved += post >= pre
        gap = abs(post - mean_acc(plain_even(s), "post"))
        assert gap <= 0.07, f"seed {s}: DP post-FL off by {gap:.4f}"
        assert result.privacy_spent is not None
        assert result.privacy_spent.epsilon > 0.0
    assert improved >= 4, f"only {improved}/5 seeds improved"


@criterion(9, "masked-feature pipeline completes; >= 4/5 improve; within 0.05 of baseline")
def test_criterion_9_missing_feature_protocol():
    improved = 0
    for s in SEEDS:
        result = plain_imputed(s)
        pre, post = mean_acc(result, "pre"), mean_acc(result, "post")
        improved += post >= pre
        diff = abs(post - mean_acc(plain_even(s), "post"))
        assert diff <= 0.05, f"seed {s}: imputed run off by {diff:.4f}"
    assert improved >= 4, f"only {improved}/5 seeds improved"

    # the protocol really ran: the masked participant trains on a full-width
    # matrix whose restored column is the shared constant
    spec = PartitionSpec(
        seed=1,
        missing_feature=MissingFeatureSpec(
            participant_id=MASKED_PARTICIPANT, feature_name=MASKED_FEATURE
        ),
    )
    parts = prepare_participants(_dataset(), spec, 5)
    target = parts[MASKED_PARTICIPANT]
    assert target.imputed_features == (MASKED_FEATURE,)
    col = target.train.feature_names.index(MASKED_FEATURE)
    assert target.train.n_features == 30
    assert np.all(target.train.features[:, col] == target.train.features[0, col])


@criterion(10, "forced-small partitions keep the seed-mean improvement property")
def test_criterion_10_quantity_skew():
    for s in SEEDS:
        small = sum(1 for o in plain_forced_small(s).outcomes if o.size_fraction <= 0.10)
        assert small >= 2, f"seed {s}: only {small} capped participants"
    pre = np.mean([mean_acc(plain_forced_small(s), "pre") for s in SEEDS])
    post = np.mean([mean_acc(plain_forced_small(s), "post") for s in SEEDS])
    assert post >= pre, f"post {post:.4f} < pre {pre:.4f}"
    assert post >= 0.93, f"post {post:.4f} < 0.93"


@criterion(11, "per-cell table reproduction is out of scope; criteria 7-10 substitute")
def test_criterion_11_synthesis_note():
    """Exact published-table values depend on unreported hyperparameters and
    seeds, so this suite asserts the behavioural properties (criteria 7-10)
    plus per-module invariants instead. Here we only pin the report shape."""
    table = build_table(
        {"plain": plain_even(1), "dp": dp_even(1), "chaos": chaos_even(1)}
    )
    assert len(table.rows) == 5
    assert table.avg_row["participant"] == "avg"
    assert set(table.avg_row) == set(COLUMNS)
    for column in COLUMNS[1:]:
        assert table.avg_row[column] is not None
        assert 0.0 <= table.avg_row[column] <= 1.0
