"""Dense binary classifier: forward pass, backprop, and plain SGD.

The architecture is a funnel MLP with ReLU + inverted dropout on the hidden
layers and a sigmoid output trained with binary cross-entropy. Everything is
a pure function of explicit inputs; randomness always comes from a generator
passed by the caller, so results are reproducible and thread-safe on
distinct parameter copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ConsistencyError, DimensionError, DomainError, NumericalError

PROB_EPS = 1e-12


def as_matrix(x, name: str = "array") -> np.ndarray:
    """Coerce to a C-order float64 2-D array and reject non-finite entries."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name}: expected a 2-D array, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"{name}: contains NaN or Inf")
    return a


@dataclass(frozen=True)
class NetworkConfig:
    """Hyperparameters of the five-dense-layer classifier.

    layer_sizes is (input width, four hidden widths, 1). batch_size of None
    means one full-batch gradient step per epoch.
    """

    layer_sizes: tuple[int, ...]
    dropout_rate: float = 0.3
    learning_rate: float = 0.01
    seed: int = 0
    batch_size: int | None = 4

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        if len(self.layer_sizes) != 6:
            raise ConfigError(
                "network.layer_sizes: expected 6 entries (input, 4 hidden, output), "
                f"got {len(self.layer_sizes)}"
            )
        if any(s < 1 for s in self.layer_sizes):
            raise ConfigError("network.layer_sizes: every layer width must be >= 1")
        if self.layer_sizes[-1] != 1:
            raise ConfigError("network.layer_sizes: output width must be 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("network.dropout_rate: must be in [0, 1)")
        if not self.learning_rate > 0.0:
            raise ConfigError("network.learning_rate: must be > 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("network.batch_size: must be >= 1 (or None for full batch)")


@dataclass
class DenseLayer:
    weights: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.weights.copy(), self.bias.copy())


@dataclass
class ModelParams:
    """Ordered dense-layer weights and biases."""

    layers: list[DenseLayer]

    def copy(self) -> "ModelParams":
        return ModelParams([l.copy() for l in self.layers])

    def shapes(self) -> list[tuple[int, int]]:
        return [l.weights.shape for l in self.layers]

    @property
    def input_width(self) -> int:
        return self.layers[0].weights.shape[0]

    def check_finite(self) -> None:
        for i, l in enumerate(self.layers):
            if not (np.all(np.isfinite(l.weights)) and np.all(np.isfinite(l.bias))):
                raise NumericalError(f"layer {i}: non-finite parameter")


def params_allclose(a: ModelParams, b: ModelParams, atol: float = 0.0, rtol: float = 0.0) -> bool:
    if a.shapes() != b.shapes():
        return False
    return all(
        np.allclose(la.weights, lb.weights, rtol=rtol, atol=atol)
        and np.allclose(la.bias, lb.bias, rtol=rtol, atol=atol)
        for la, lb in zip(a.layers, b.layers)
    )


def params_equal(a: ModelParams, b: ModelParams) -> bool:
    """Bit-exact equality of two parameter sets."""
    if a.shapes() != b.shapes():
        return False
    return all(
        np.array_equal(la.weights, lb.weights) and np.array_equal(la.bias, lb.bias)
        for la, lb in zip(a.layers, b.layers)
    )


def global_l2_norm(params: ModelParams) -> float:
    """L2 norm over every weight and bias entry taken together."""
    total = 0.0
    for l in params.layers:
        total += float(np.sum(l.weights * l.weights)) + float(np.sum(l.bias * l.bias))
    return float(np.sqrt(total))


def init_network(config: NetworkConfig, seed: int | None = None) -> ModelParams:
    """Glorot-uniform weights, zero biases; deterministic for a given seed."""
    if seed is None:
        seed = config.seed
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1)))
    layers = []
    sizes = config.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        s = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-s, s, size=(fan_in, fan_out))
        layers.append(DenseLayer(w, np.zeros(fan_out)))
    return ModelParams(layers)


@dataclass
class ForwardCache:
    """Backprop bookkeeping from one forward call.

    pre_acts has one entry per weight layer; hidden_acts and masks cover the
    hidden layers only. Masks are already scaled by 1/(1-p) (all ones in eval
    mode), so backward just multiplies by them.
    """

    pre_acts: list[np.ndarray]
    hidden_acts: list[np.ndarray]
    masks: list[np.ndarray]
    probs: np.ndarray
    train: bool
    n_layers: int = field(init=False)

    def __post_init__(self):
        self.n_layers = len(self.pre_acts)


def _check_forward_shapes(params: ModelParams, inputs: np.ndarray) -> None:
    if inputs.shape[1] != params.input_width:
        raise DimensionError(
            f"inputs have {inputs.shape[1]} features, network expects {params.input_width}"
        )


def forward(
    params: ModelParams,
    inputs,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
    dropout_rate: float = 0.0,
) -> tuple[np.ndarray, ForwardCache]:
    """Run the network; hidden layers use ReLU then inverted dropout.

    In train mode with dropout_rate > 0 an rng is required and fresh masks
    are drawn per call; eval mode ignores dropout entirely, so eval output is
    a pure function of (params, inputs). Returns (probabilities, cache).
    """
    if mode not in ("train", "eval"):
        raise ConfigError(f"forward mode must be 'train' or 'eval', got {mode!r}")
    x = as_matrix(inputs, "inputs")
    _check_forward_shapes(params, x)
    use_dropout = mode == "train" and dropout_rate > 0.0
    if use_dropout and rng is None:
        raise ConfigError("train-mode forward with dropout needs an rng")

    pre_acts, hidden_acts, masks = [], [], []
    a = x
    for layer in params.layers[:-1]:
        z = a @ layer.weights + layer.bias
        pre_acts.append(z)
        h = np.maximum(z, 0.0)
        if use_dropout:
            keep = (rng.random(h.shape) >= dropout_rate) / (1.0 - dropout_rate)
        else:
            keep = np.ones_like(h)
        masks.append(keep)
        a = h * keep
        hidden_acts.append(a)
    out = params.layers[-1]
    z_out = a @ out.weights + out.bias
    pre_acts.append(z_out)
    with np.errstate(over="ignore"):  # exp overflow saturates cleanly to 0/1
        probs = 1.0 / (1.0 + np.exp(-z_out[:, 0]))
    if not np.all(np.isfinite(probs)):
        raise NumericalError("forward produced non-finite probabilities")
    return probs, ForwardCache(pre_acts, hidden_acts, masks, probs, mode == "train")


def bce_loss(predictions, labels) -> float:
    """Mean binary cross-entropy with predictions clamped away from {0, 1}."""
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.size == 0 or y.size == 0:
        raise DomainError("bce_loss: empty prediction or label vector")
    if p.shape != y.shape:
        raise DimensionError(f"bce_loss: shape mismatch {p.shape} vs {y.shape}")
    p = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _check_cache(params: ModelParams, cache: ForwardCache, inputs: np.ndarray) -> None:
    if cache.n_layers != len(params.layers):
        raise ConsistencyError("cache depth does not match the parameter set")
    if cache.pre_acts[0].shape[0] != inputs.shape[0]:
        raise ConsistencyError("cache batch size does not match the inputs")
    for z, layer in zip(cache.pre_acts, params.layers):
        if z.shape[1] != layer.weights.shape[1]:
            raise ConsistencyError("cache layer widths do not match the parameter set")


def backward(params: ModelParams, cache: ForwardCache, inputs, labels) -> ModelParams:
    """Exact gradient of the mean BCE under the cached dropout masks.

    Uses the sigmoid + cross-entropy shortcut, so the output-layer error is
    (p - y)/n. Returns a ModelParams-shaped gradient.
    """
    x = as_matrix(inputs, "inputs")
    y = np.asarray(labels, dtype=np.float64)
    _check_cache(params, cache, x)
    n = x.shape[0]
    delta = ((cache.probs - y) / n)[:, None]

    grads: list[DenseLayer] = [None] * len(params.layers)  # type: ignore[list-item]
    for i in range(len(params.layers) - 1, -1, -1):
        a_prev = x if i == 0 else cache.hidden_acts[i - 1]
        grads[i] = DenseLayer(a_prev.T @ delta, delta.sum(axis=0))
        if i > 0:
            back = delta @ params.layers[i].weights.T
            delta = back * cache.masks[i - 1] * (cache.pre_acts[i - 1] > 0.0)
    return ModelParams(grads)


@dataclass
class PerExampleGrads:
    """One gradient per example, stored stacked per layer for vector math."""

    weight_stacks: list[np.ndarray]  # each (n, fan_in, fan_out)
    bias_stacks: list[np.ndarray]  # each (n, fan_out)

    def __len__(self) -> int:
        return self.weight_stacks[0].shape[0]

    def __getitem__(self, i: int) -> ModelParams:
        return ModelParams(
            [DenseLayer(w[i].copy(), b[i].copy()) for w, b in zip(self.weight_stacks, self.bias_stacks)]
        )

    def mean(self) -> ModelParams:
        n = len(self)
        return ModelParams(
            [
                DenseLayer(w.sum(axis=0) / n, b.sum(axis=0) / n)
                for w, b in zip(self.weight_stacks, self.bias_stacks)
            ]
        )

    def norms(self) -> np.ndarray:
        """Per-example global L2 norms, shape (n,)."""
        sq = np.zeros(len(self))
        for w, b in zip(self.weight_stacks, self.bias_stacks):
            sq += (w * w).sum(axis=(1, 2)) + (b * b).sum(axis=1)
        return np.sqrt(sq)


def per_example_backward(
    params: ModelParams,
    inputs,
    labels,
    rng: np.random.Generator | None = None,
    dropout_rate: float = 0.0,
) -> PerExampleGrads:
    """Gradient of each example's own BCE loss, computed in one pass.

    Each example keeps its own dropout mask row, exactly as in a batched
    train-mode forward, so grads[i] matches backward() run on example i
    alone with that mask. The mean over examples equals the batch gradient.
    """
    x = as_matrix(inputs, "inputs")
    y = np.asarray(labels, dtype=np.float64)
    mode = "train" if (dropout_rate > 0.0 and rng is not None) else "eval"
    probs, cache = forward(params, x, mode, rng, dropout_rate)
    delta = (probs - y)[:, None]  # per-example loss, no 1/n

    n_layers = len(params.layers)
    w_stacks: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    b_stacks: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    for i in range(n_layers - 1, -1, -1):
        a_prev = x if i == 0 else cache.hidden_acts[i - 1]
        w_stacks[i] = np.einsum("bi,bo->bio", a_prev, delta)
        b_stacks[i] = delta.copy()
        if i > 0:
            back = delta @ params.layers[i].weights.T
            delta = back * cache.masks[i - 1] * (cache.pre_acts[i - 1] > 0.0)
    return PerExampleGrads(w_stacks, b_stacks)


def sgd_step(params: ModelParams, grads: ModelParams, learning_rate: float) -> ModelParams:
    """One plain gradient step: w <- w - lr * g."""
    if params.shapes() != grads.shapes():
        raise DimensionError("gradient shapes do not match the parameter set")
    grads.check_finite()
    return ModelParams(
        [
            DenseLayer(p.weights - learning_rate * g.weights, p.bias - learning_rate * g.bias)
            for p, g in zip(params.layers, grads.layers)
        ]
    )
