"""Differentially private gradient machinery.

DP-SGD: clip each example's gradient to a global L2 norm bound, sum, add
Gaussian noise of scale sigma*C once per lot, and step on the (1/L)-scaled
result. The epsilon estimate composes a per-step Gaussian-mechanism bound
with the strong-composition theorem; it is deliberately conservative (no
moments accounting).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .nn import DenseLayer, ModelParams, PerExampleGrads, global_l2_norm, sgd_step

EPSILON_METHOD = "gaussian-mechanism + strong composition (conservative)"


@dataclass(frozen=True)
class DpConfig:
    """Clip bound C, noise scale sigma, lot size L, failure probability delta.

    Defaults are calibrated for few-hundred-row participant shares: small
    lots keep the per-epoch step count high enough to converge within a
    typical round budget, and the clip bound sits just above the median
    per-example gradient norm of the bundled classifier.
    """

    clip_norm: float = 2.0
    noise_scale: float = 1.0
    lot_size: int = 4
    delta: float = 1e-5

    def __post_init__(self):
        if not self.clip_norm > 0.0:
            raise ConfigError(f"dp.clip_norm={self.clip_norm}: must be > 0")
        if self.noise_scale < 0.0:
            raise ConfigError(f"dp.noise_scale={self.noise_scale}: must be >= 0")
        if self.lot_size < 1:
            raise ConfigError(f"dp.lot_size={self.lot_size}: must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"dp.delta={self.delta}: must lie in (0, 1)")


@dataclass(frozen=True)
class PrivacySpent:
    """(epsilon, delta) spent after `steps` noisy lot updates.

    warning is non-None when the estimate degenerates (sigma=0 gives no
    privacy, so epsilon is +inf).
    """

    epsilon: float
    delta: float
    steps: int
    warning: str | None = None


def clip_gradient(grad: ModelParams, clip_norm: float) -> ModelParams:
    """Scale grad by min(1, C/||grad||2); below the bound it is returned
    unchanged bit-exactly."""
    if not clip_norm > 0.0:
        raise ConfigError(f"clip_norm={clip_norm}: must be > 0")
    grad.check_finite()
    norm = global_l2_norm(grad)
    if norm <= clip_norm:
        return grad.copy()
    factor = clip_norm / norm
    return ModelParams(
        [DenseLayer(l.weights * factor, l.bias * factor) for l in grad.layers]
    )


def _sum_clipped(per_example: PerExampleGrads, clip_norm: float) -> ModelParams:
    """Sum of per-example gradients, each clipped to clip_norm.

    Factors are exactly 1.0 for examples already under the bound, so when
    nothing clips this reduces bit-for-bit to the plain stacked sum.
    """
    norms = per_example.norms()
    factors = np.ones_like(norms)
    over = norms > clip_norm
    factors[over] = clip_norm / norms[over]
    layers = []
    for w, b in zip(per_example.weight_stacks, per_example.bias_stacks):
        layers.append(
            DenseLayer(
                (w * factors[:, None, None]).sum(axis=0),
                (b * factors[:, None]).sum(axis=0),
            )
        )
    return ModelParams(layers)


def dp_sgd_step(
    params: ModelParams,
    per_example: PerExampleGrads,
    config: DpConfig,
    learning_rate: float,
    rng: np.random.Generator,
) -> ModelParams:
    """One noisy lot update: params - lr * (sum of clipped grads + noise)/L.

    Noise is N(0, (sigma*C)^2) per coordinate, drawn layer by layer
    (weights then bias) so a fixed rng seed reproduces the step exactly.
    With sigma=0 no draw happens at all and the update equals a plain SGD
    step on the mean clipped gradient.
    """
    L = len(per_example)
    if L != config.lot_size:
        raise ConfigError(f"lot has {L} examples, config.lot_size is {config.lot_size}")
    total = _sum_clipped(per_example, config.clip_norm)
    sigma = config.noise_scale
    if sigma > 0.0:
        scale = sigma * config.clip_norm
        for layer in total.layers:
            layer.weights = layer.weights + rng.normal(0.0, scale, size=layer.weights.shape)
            layer.bias = layer.bias + rng.normal(0.0, scale, size=layer.bias.shape)
    g = ModelParams(
        [DenseLayer(l.weights / L, l.bias / L) for l in total.layers]
    )
    return sgd_step(params, g, learning_rate)


def lot_indices(n_examples: int, lot_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Shuffle the example indices and cut contiguous lots of size
    min(lot_size, n); an incomplete tail lot is dropped."""
    if n_examples < 1:
        raise DomainError("need at least one example to form lots")
    effective = min(lot_size, n_examples)
    perm = rng.permutation(n_examples)
    n_lots = n_examples // effective
    return [perm[i * effective : (i + 1) * effective] for i in range(n_lots)]


def estimate_epsilon(config: DpConfig, steps: int, dataset_size: int) -> PrivacySpent:
    """Conservative (epsilon, delta) estimate after `steps` lot updates.

    Per-step cost is the Gaussian-mechanism bound scaled by the sampling
    ratio q = L/dataset_size (clamped to 1), composed with the strong
    composition theorem:

        eps0   = sqrt(2*ln(1.25/delta)) / sigma
        eps_q  = q * eps0
        eps    = eps_q*sqrt(2*steps*ln(1/delta)) + steps*eps_q*(e^eps_q - 1)

    steps=0 spends nothing; sigma=0 gives no guarantee (epsilon +inf, with
    a warning set).
    """
    if steps < 0:
        raise ConfigError(f"steps={steps}: must be >= 0")
    if dataset_size < 1:
        raise ConfigError(f"dataset_size={dataset_size}: must be >= 1")
    if steps == 0:
        return PrivacySpent(epsilon=0.0, delta=config.delta, steps=0)
    if config.noise_scale == 0.0:
        return PrivacySpent(
            epsilon=math.inf,
            delta=config.delta,
            steps=steps,
            warning="noise_scale is 0: no differential privacy guarantee",
        )
    q = min(1.0, config.lot_size / dataset_size)
    eps0 = math.sqrt(2.0 * math.log(1.25 / config.delta)) / config.noise_scale
    eps_step = q * eps0
    epsilon = eps_step * math.sqrt(2.0 * steps * math.log(1.0 / config.delta)) + steps * eps_step * math.expm1(eps_step)
    return PrivacySpent(epsilon=epsilon, delta=config.delta, steps=steps)
