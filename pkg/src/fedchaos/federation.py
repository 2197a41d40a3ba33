"""Client-server federated training loop.

One round is: the server distributes the global parameters, every
participant trains locally (plain SGD, or DP-SGD under the differential
privacy mode), the update travels back (XOR-sealed under the cipher mode),
and the server aggregates with a sample-count-weighted average. The
reported global loss is the plain mean of per-participant train losses.

All randomness is derived from config.seed through per-purpose seed
sequences, so results are identical regardless of scheduling; participants
may train concurrently (FEDCHAOS_THREADS caps the pool).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import chaos
from .data import ParticipantData
from .dp import DpConfig, PrivacySpent, dp_sgd_step, estimate_epsilon, lot_indices
from .errors import ConfigError, DimensionError
from .metrics import Metrics, evaluate_model
from .nn import (
    DenseLayer,
    ModelParams,
    NetworkConfig,
    backward,
    bce_loss,
    forward,
    init_network,
    per_example_backward,
    sgd_step,
)

SEED_MASK = 2**64 - 1
_SEED_INIT, _SEED_PREFL, _SEED_ROUND = 0, 1, 2


@dataclass(frozen=True)
class PlainMode:
    """Parameters travel in the clear."""


@dataclass(frozen=True)
class DpMode:
    """Local training runs DP-SGD under this budget configuration."""

    dp: DpConfig = field(default_factory=DpConfig)


@dataclass(frozen=True)
class CipherMode:
    """Parameters are XOR-sealed with per-participant logistic-map keys."""

    r: float = chaos.DEFAULT_R
    burn_in: int = chaos.DEFAULT_BURN_IN


PrivacyMode = PlainMode | DpMode | CipherMode


def mode_name(mode: PrivacyMode) -> str:
    if isinstance(mode, PlainMode):
        return "plain"
    if isinstance(mode, DpMode):
        return "dp"
    if isinstance(mode, CipherMode):
        return "chaos"
    raise ConfigError(f"unknown privacy mode {type(mode).__name__}")


@dataclass
class Participant:
    id: int
    data: ParticipantData
    local_params: ModelParams | None = None
    chaos_key: chaos.ChaosKey | None = None


@dataclass(frozen=True)
class FederationConfig:
    network: NetworkConfig
    n_participants: int = 5
    rounds_max: int = 10
    local_epochs: int = 5
    val_threshold: float | None = None
    mode: PrivacyMode = field(default_factory=PlainMode)
    seed: int = 0

    def __post_init__(self):
        if self.n_participants < 2:
            raise ConfigError(f"federation.n_participants={self.n_participants}: must be >= 2")
        if self.rounds_max < 0:
            raise ConfigError(f"federation.rounds_max={self.rounds_max}: must be >= 0")
        if self.local_epochs < 1:
            raise ConfigError(f"federation.local_epochs={self.local_epochs}: must be >= 1")
        if not isinstance(self.mode, (PlainMode, DpMode, CipherMode)):
            raise ConfigError(f"federation.mode: unknown mode {type(self.mode).__name__}")


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    loss_before: float
    loss_after: float
    mean_val_accuracy: float


@dataclass(frozen=True)
class ParticipantOutcome:
    participant_id: int
    size_fraction: float
    positive_rate: float
    pre: Metrics
    post: Metrics


@dataclass
class FederationResult:
    outcomes: list[ParticipantOutcome]
    history: list[RoundRecord]
    privacy_spent: PrivacySpent | None
    final_params: ModelParams = field(compare=False, repr=False, default=None)


def _derived_seed(seed: int, *tags: int) -> int:
    ss = np.random.SeedSequence(entropy=(int(seed) & SEED_MASK, *tags))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=(int(seed) & SEED_MASK, *tags))
    )


def worker_count() -> int:
    """Parallelism cap from FEDCHAOS_THREADS (default 1)."""
    raw = os.environ.get("FEDCHAOS_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"FEDCHAOS_THREADS={raw!r}: must be an integer") from None
    return max(1, n)


def _batch_indices(n: int, batch_size: int | None, rng: np.random.Generator) -> list[np.ndarray]:
    perm = rng.permutation(n)
    if batch_size is None or batch_size >= n:
        return [perm]
    return [perm[i : i + batch_size] for i in range(0, n, batch_size)]


def local_train(
    participant: Participant,
    global_params: ModelParams,
    epochs: int,
    net: NetworkConfig,
    mode: PrivacyMode,
    rng: np.random.Generator,
) -> ModelParams:
    """Train a copy of global_params on the participant's own train split.

    Plain and cipher modes run minibatch SGD; the DP mode runs DP-SGD on
    shuffled lots (incomplete tails dropped, lot size capped at the split
    size). Nothing of the participant's data escapes this call.
    """
    train = participant.data.train
    if train.n_rows < 1:
        raise ConfigError(f"participant {participant.id}: empty train split")
    if epochs < 0:
        raise ConfigError(f"epochs={epochs}: must be >= 0")
    params = global_params.copy()
    x, y = train.features, train.labels

    if isinstance(mode, DpMode):
        effective = replace(mode.dp, lot_size=min(mode.dp.lot_size, train.n_rows))
        for _ in range(epochs):
            for lot in lot_indices(train.n_rows, effective.lot_size, rng):
                per = per_example_backward(
                    params, x[lot], y[lot], rng=rng, dropout_rate=net.dropout_rate
                )
                params = dp_sgd_step(params, per, effective, net.learning_rate, rng)
        return params

    for _ in range(epochs):
        for batch in _batch_indices(train.n_rows, net.batch_size, rng):
            _, cache = forward(params, x[batch], mode="train", rng=rng, dropout_rate=net.dropout_rate)
            grads = backward(params, cache, x[batch], y[batch])
            params = sgd_step(params, grads, net.learning_rate)
    return params


def transmit(
    params: ModelParams,
    mode: PrivacyMode,
    key: chaos.ChaosKey | None = None,
    receive_key: chaos.ChaosKey | None = None,
) -> ModelParams:
    """Simulated wire hop; under the cipher mode the payload is sealed and
    reopened, which must reproduce the input bit for bit."""
    if isinstance(mode, CipherMode):
        if key is None:
            raise ConfigError("cipher-mode transmit needs a key")
        blob = chaos.seal_params(params, key)
        return chaos.open_params(blob, receive_key if receive_key is not None else key, params.shapes())
    if key is not None or receive_key is not None:
        raise ConfigError(f"{mode_name(mode)}-mode transmit takes no key")
    return params


def fed_avg(updates: list[tuple[ModelParams, int]]) -> ModelParams:
    """Sample-count-weighted average of parameter sets."""
    if not updates:
        raise ConfigError("fed_avg needs at least one update")
    shapes = updates[0][0].shapes()
    total = sum(n for _, n in updates)
    if total <= 0:
        raise ConfigError("fed_avg weights sum to zero")
    acc = [
        DenseLayer(np.zeros_like(l.weights), np.zeros_like(l.bias))
        for l in updates[0][0].layers
    ]
    for params, n in updates:
        if params.shapes() != shapes:
            raise DimensionError(f"fed_avg shape mismatch: {params.shapes()} vs {shapes}")
        w = n / total
        for a, l in zip(acc, params.layers):
            a.weights += w * l.weights
            a.bias += w * l.bias
    return ModelParams(acc)


def global_loss(participants: list[Participant], params: ModelParams) -> float:
    """Unweighted mean of per-participant train BCE (eval-mode forward)."""
    if not participants:
        raise ConfigError("global_loss needs at least one participant")
    losses = []
    for p in participants:
        probs, _ = forward(params, p.data.train.features, mode="eval")
        losses.append(bce_loss(probs, p.data.train.labels))
    return float(np.mean(losses))


def _mean_val_accuracy(participants: list[Participant], params: ModelParams) -> float:
    accs = [
        evaluate_model(params, p.data.val.features, p.data.val.labels).accuracy
        for p in participants
    ]
    return float(np.mean(accs))


def run_round(
    participants: list[Participant],
    global_params: ModelParams,
    config: FederationConfig,
    round_index: int,
) -> tuple[ModelParams, RoundRecord]:
    """distribute -> local_train -> transmit -> weighted aggregate."""
    loss_before = global_loss(participants, global_params)

    def train_one(p: Participant) -> ModelParams:
        rng = _rng(config.seed, _SEED_ROUND, round_index, p.id)
        local = local_train(p, global_params, config.local_epochs, config.network, config.mode, rng)
        key = p.chaos_key if isinstance(config.mode, CipherMode) else None
        return transmit(local, config.mode, key=key)

    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            locals_ = list(pool.map(train_one, participants))
    else:
        locals_ = [train_one(p) for p in participants]
    for p, local in zip(participants, locals_):
        p.local_params = local

    new_params = fed_avg([(lp, p.data.train.n_rows) for p, lp in zip(participants, locals_)])
    record = RoundRecord(
        round_index=round_index,
        loss_before=loss_before,
        loss_after=global_loss(participants, new_params),
        mean_val_accuracy=_mean_val_accuracy(participants, new_params),
    )
    return new_params, record


def check_termination(history: list[RoundRecord], config: FederationConfig) -> bool:
    if len(history) >= config.rounds_max:
        return True
    if config.val_threshold is not None and history:
        return history[-1].mean_val_accuracy >= config.val_threshold
    return False


def _dp_privacy_spent(
    participants: list[Participant], config: FederationConfig, rounds_executed: int
) -> PrivacySpent:
    """Worst-case budget across participants for the federated phase.

    Steps per participant: executed rounds x local epochs x lots per epoch
    (with the lot size capped at the train-split size, as in training).
    """
    dp_config: DpConfig = config.mode.dp
    worst: PrivacySpent | None = None
    for p in participants:
        n = p.data.train.n_rows
        effective = min(dp_config.lot_size, n)
        steps = rounds_executed * config.local_epochs * (n // effective)
        spent = estimate_epsilon(replace(dp_config, lot_size=effective), steps, n)
        if worst is None or spent.epsilon > worst.epsilon:
            worst = spent
    return worst


def run_federation(config: FederationConfig, participant_data: list[ParticipantData]) -> FederationResult:
    """Full experiment: pre-FL baselines, the round loop, post-FL metrics.

    Pre-FL trains each participant alone from the shared initialization for
    rounds_max*local_epochs epochs (same optimizer as the mode dictates) and
    scores it on that participant's test split; post-FL scores the final
    global parameters on the same test splits.
    """
    if len(participant_data) != config.n_participants:
        raise ConfigError(
            f"{len(participant_data)} participant datasets for n_participants={config.n_participants}"
        )
    n_features = participant_data[0].train.n_features
    if config.network.layer_sizes[0] != n_features:
        raise ConfigError(
            f"network expects {config.network.layer_sizes[0]} features, data has {n_features}"
        )

    participants = [Participant(id=pd.id, data=pd) for pd in participant_data]
    if isinstance(config.mode, CipherMode):
        for p in participants:
            p.chaos_key = chaos.derive_key(
                config.seed, p.id, r=config.mode.r, burn_in=config.mode.burn_in
            )

    init_params = init_network(config.network, seed=_derived_seed(config.seed, _SEED_INIT))

    pre_metrics: list[Metrics] = []
    pre_epochs = config.rounds_max * config.local_epochs
    for p in participants:
        rng = _rng(config.seed, _SEED_PREFL, p.id)
        solo = local_train(p, init_params, pre_epochs, config.network, config.mode, rng)
        pre_metrics.append(evaluate_model(solo, p.data.test.features, p.data.test.labels))

    params = init_params
    history: list[RoundRecord] = []
    while not check_termination(history, config):
        params, record = run_round(participants, params, config, round_index=len(history))
        history.append(record)

    outcomes = []
    for p, pre in zip(participants, pre_metrics):
        post = evaluate_model(params, p.data.test.features, p.data.test.labels)
        outcomes.append(
            ParticipantOutcome(
                participant_id=p.id,
                size_fraction=p.data.size_fraction,
                positive_rate=p.data.positive_rate,
                pre=pre,
                post=post,
            )
        )

    privacy = (
        _dp_privacy_spent(participants, config, len(history))
        if isinstance(config.mode, DpMode)
        else None
    )
    return FederationResult(
        outcomes=outcomes, history=history, privacy_spent=privacy, final_params=params
    )
