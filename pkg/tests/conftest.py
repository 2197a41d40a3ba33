"""Shared fixtures and helpers for the test suite."""

import sys

import numpy as np
import pytest

from fedchaos.data import Dataset
from fedchaos.datasets import load_breast_cancer_dataset
from fedchaos.nn import DenseLayer, ModelParams


@pytest.fixture(scope="session")
def cancer_dataset():
    """The bundled 569-row binary classification dataset, loaded once."""
    return load_breast_cancer_dataset()


def make_separable_dataset(n=120, n_features=4, seed=0, margin=2.0):
    """Two well-separated Gaussian blobs, half positive and half negative."""
    rng = np.random.default_rng(seed)
    half = n // 2
    neg = rng.normal(-margin, 1.0, size=(half, n_features))
    pos = rng.normal(margin, 1.0, size=(n - half, n_features))
    features = np.vstack([neg, pos])
    labels = np.concatenate([np.zeros(half), np.ones(n - half)])
    order = rng.permutation(n)
    names = tuple(f"f{i}" for i in range(n_features))
    return Dataset(feature_names=names, features=features[order], labels=labels[order])


def make_params(layer_specs):
    """Build ModelParams from [(weights, bias), ...] given as nested lists."""
    layers = []
    for weights, bias in layer_specs:
        layers.append(
            DenseLayer(
                weights=np.asarray(weights, dtype=np.float64),
                bias=np.asarray(bias, dtype=np.float64),
            )
        )
    return ModelParams(layers=layers)


def random_params(sizes, rng):
    """Random dense parameters for an arbitrary layer-size sequence."""
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        layers.append(
            DenseLayer(
                weights=rng.normal(0.0, 0.5, size=(fan_in, fan_out)),
                bias=rng.normal(0.0, 0.1, size=fan_out),
            )
        )
    return ModelParams(layers=layers)


@pytest.fixture
def separable_dataset():
    return make_separable_dataset()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance verdict lines where capture cannot hide them."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "CRITERION_LINES", None) if module else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
